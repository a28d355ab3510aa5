#include "cmix/stats.hpp"

#include <cmath>
#include <fstream>

#include "cmix/text.hpp"
#include "json.hpp"

namespace cmix {

using nlohmann::json;

Lexicon load_lexicon(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open lexicon '" + path + "'");
  Lexicon lex;
  std::string line;
  while (std::getline(in, line)) {
    const std::string term = trim_whitespace(ascii_lower(line));
    if (!term.empty()) lex.terms.insert(term);
  }
  return lex;
}

std::string to_json(const StatReport& report) {
  return json{{"n_pos", report.n_pos},
              {"n_neg", report.n_neg},
              {"kl", report.kl},
              {"hurtful_fraction_pos", report.hurtful_fraction_pos},
              {"hurtful_fraction_neg", report.hurtful_fraction_neg}}
      .dump(2);
}

StatReport stat_report_from_json(const std::string& text) {
  json j = json::parse(text);
  StatReport r;
  r.n_pos = j.at("n_pos").get<std::size_t>();
  r.n_neg = j.at("n_neg").get<std::size_t>();
  r.kl = j.at("kl").get<double>();
  r.hurtful_fraction_pos = j.at("hurtful_fraction_pos").get<double>();
  r.hurtful_fraction_neg = j.at("hurtful_fraction_neg").get<double>();
  return r;
}

WordDist word_distribution(const std::vector<Sample>& samples, int label,
                           double alpha, const std::set<std::string>& union_vocab) {
  if (alpha <= 0.0) throw ValidationError("word_distribution: alpha must be > 0");
  if (union_vocab.empty()) {
    throw ValidationError("word_distribution: union vocabulary is empty");
  }
  std::map<std::string, std::size_t> counts;
  std::size_t total = 0;
  bool class_seen = false;
  for (const Sample& s : samples) {
    if (s.label != label) continue;
    class_seen = true;
    for (const std::string& token : tokenize(s.text)) {
      if (!union_vocab.count(token)) {
        throw ValidationError("word_distribution: token '" + token +
                              "' not in union vocabulary");
      }
      ++counts[token];
      ++total;
    }
  }
  if (!class_seen) {
    throw ValidationError("word_distribution: no samples with label " +
                          std::to_string(label));
  }

  WordDist dist;
  dist.alpha = alpha;
  dist.vocab = union_vocab;
  const double denom =
      static_cast<double>(total) + alpha * static_cast<double>(union_vocab.size());
  for (const std::string& token : union_vocab) {
    const auto it = counts.find(token);
    const double count = it == counts.end() ? 0.0 : static_cast<double>(it->second);
    dist.probs[token] = (count + alpha) / denom;
  }
  return dist;
}

double symmetric_kl(const WordDist& p, const WordDist& q) {
  if (p.vocab != q.vocab) {
    throw ValidationError("symmetric_kl: distributions cover different vocabularies");
  }
  double kl = 0.0;
  for (const std::string& token : p.vocab) {
    const double pw = p.probs.at(token);
    const double qw = q.probs.at(token);
    kl += pw * std::log(pw / qw) + qw * std::log(qw / pw);
  }
  return kl;
}

namespace {

bool contains_term(const std::vector<std::string>& tokens,
                   const std::vector<std::string>& term_tokens) {
  if (term_tokens.empty() || term_tokens.size() > tokens.size()) return false;
  const std::size_t last_start = tokens.size() - term_tokens.size();
  for (std::size_t start = 0; start <= last_start; ++start) {
    bool match = true;
    for (std::size_t k = 0; k < term_tokens.size(); ++k) {
      if (tokens[start + k] != term_tokens[k]) {
        match = false;
        break;
      }
    }
    if (match) return true;
  }
  return false;
}

}  // namespace

double hurtful_fraction(const std::vector<Sample>& samples, const Lexicon& lexicon,
                        int label) {
  std::vector<std::vector<std::string>> term_tokens;
  for (const std::string& term : lexicon.terms) {
    if (term.empty()) throw ValidationError("hurtful_fraction: empty lexicon term");
    term_tokens.push_back(tokenize(term));
  }

  std::size_t class_size = 0;
  std::size_t hits = 0;
  for (const Sample& s : samples) {
    if (s.label != label) continue;
    ++class_size;
    const std::vector<std::string> tokens = tokenize(s.text);
    for (const auto& term : term_tokens) {
      if (contains_term(tokens, term)) {
        ++hits;
        break;
      }
    }
  }
  if (class_size == 0) {
    throw ValidationError("hurtful_fraction: no samples with label " +
                          std::to_string(label));
  }
  return static_cast<double>(hits) / static_cast<double>(class_size);
}

StatReport dataset_report(const std::vector<Sample>& samples, const Lexicon& lexicon,
                          double alpha) {
  std::set<std::string> union_vocab;
  StatReport report;
  for (const Sample& s : samples) {
    if (s.label == 1) ++report.n_pos;
    if (s.label == 0) ++report.n_neg;
    for (const std::string& token : tokenize(s.text)) union_vocab.insert(token);
  }
  const WordDist pos = word_distribution(samples, 1, alpha, union_vocab);
  const WordDist neg = word_distribution(samples, 0, alpha, union_vocab);
  report.kl = symmetric_kl(pos, neg);
  report.hurtful_fraction_pos = hurtful_fraction(samples, lexicon, 1);
  report.hurtful_fraction_neg = hurtful_fraction(samples, lexicon, 0);
  return report;
}

}  // namespace cmix
