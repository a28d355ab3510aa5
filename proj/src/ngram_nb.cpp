#include "cmix/ngram_nb.hpp"

#include <cmath>
#include <fstream>

#include "cmix/text.hpp"
#include "json.hpp"

namespace cmix {

using nlohmann::json;

std::vector<std::string> extract_ngrams(const std::string& text,
                                        const std::set<int>& n_set) {
  const std::vector<std::string> tokens = tokenize(text);
  std::vector<std::string> ngrams;
  for (int n : n_set) {
    if (n < 1) throw ValidationError("extract_ngrams: n must be >= 1");
    if (static_cast<std::size_t>(n) > tokens.size()) continue;
    for (std::size_t start = 0; start + n <= tokens.size(); ++start) {
      std::string gram = tokens[start];
      for (int k = 1; k < n; ++k) {
        gram += ' ';
        gram += tokens[start + k];
      }
      ngrams.push_back(std::move(gram));
    }
  }
  return ngrams;
}

NGramNB fit_nb(const std::vector<Sample>& train, const std::set<int>& n_set,
               double alpha) {
  if (alpha <= 0.0) throw ValidationError("fit_nb: alpha must be > 0");
  if (n_set.empty()) throw ValidationError("fit_nb: n_set is empty");

  NGramNB model;
  model.n_set_ = n_set;
  model.alpha_ = alpha;

  std::size_t class_docs[2] = {0, 0};
  std::map<std::string, std::size_t> counts[2];
  std::size_t totals[2] = {0, 0};
  for (const Sample& s : train) {
    if (s.label != 0 && s.label != 1) {
      throw ValidationError("fit_nb: sample '" + s.id + "' has non-binary label");
    }
    ++class_docs[s.label];
    for (std::string& gram : extract_ngrams(s.text, n_set)) {
      ++totals[s.label];
      ++counts[s.label][std::move(gram)];
    }
  }
  for (int label : {0, 1}) {
    if (class_docs[label] == 0) {
      throw ValidationError("fit_nb: class " + std::to_string(label) +
                            " absent from training data");
    }
  }

  for (int label : {0, 1}) {
    for (const auto& [gram, unused] : counts[label]) model.vocab_.insert(gram);
  }

  const double n_docs = static_cast<double>(train.size());
  for (int label : {0, 1}) {
    model.log_prior_[label] =
        std::log(static_cast<double>(class_docs[label]) / n_docs);
    const double denom = static_cast<double>(totals[label]) +
                         alpha * static_cast<double>(model.vocab_.size());
    for (const std::string& gram : model.vocab_) {
      const auto it = counts[label].find(gram);
      const double c = it == counts[label].end() ? 0.0 : static_cast<double>(it->second);
      model.cond_[label][gram] = std::log((c + alpha) / denom);
    }
    model.unseen_logprob_[label] = std::log(alpha / denom);
  }
  return model;
}

double NGramNB::cond_logprob(int label, const std::string& ngram) const {
  const auto it = cond_[label].find(ngram);
  return it == cond_[label].end() ? unseen_logprob_[label] : it->second;
}

std::pair<int, double> NGramNB::predict(const std::string& text) const {
  double score[2] = {log_prior_[0], log_prior_[1]};
  for (const std::string& gram : extract_ngrams(text, n_set_)) {
    score[0] += cond_logprob(0, gram);
    score[1] += cond_logprob(1, gram);
  }
  const double log_odds = score[1] - score[0];
  return {log_odds > 0.0 ? 1 : 0, log_odds};
}

void NGramNB::save(const std::string& path) const {
  json j;
  j["format"] = "ngram-nb";
  j["version"] = 1;
  j["n_set"] = std::vector<int>(n_set_.begin(), n_set_.end());
  j["alpha"] = alpha_;
  j["log_prior"] = {log_prior_[0], log_prior_[1]};
  j["unseen_logprob"] = {unseen_logprob_[0], unseen_logprob_[1]};
  json cond = json::object();
  for (int label : {0, 1}) {
    json per = json::object();
    for (const auto& [gram, lp] : cond_[label]) per[gram] = lp;
    cond[std::to_string(label)] = std::move(per);
  }
  j["cond_logprob"] = std::move(cond);
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write '" + path + "'");
  out << j.dump(2) << "\n";
}

NGramNB NGramNB::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path + ": malformed model file: " + e.what());
  }
  if (j.value("format", "") != "ngram-nb" || j.value("version", 0) != 1) {
    throw ValidationError(path + ": not a version-1 ngram-nb model");
  }
  NGramNB model;
  model.n_set_.clear();
  for (int n : j.at("n_set").get<std::vector<int>>()) model.n_set_.insert(n);
  model.alpha_ = j.at("alpha").get<double>();
  model.log_prior_[0] = j.at("log_prior").at(0).get<double>();
  model.log_prior_[1] = j.at("log_prior").at(1).get<double>();
  model.unseen_logprob_[0] = j.at("unseen_logprob").at(0).get<double>();
  model.unseen_logprob_[1] = j.at("unseen_logprob").at(1).get<double>();
  for (int label : {0, 1}) {
    for (const auto& [gram, lp] : j.at("cond_logprob").at(std::to_string(label)).items()) {
      model.cond_[label][gram] = lp.get<double>();
      model.vocab_.insert(gram);
    }
  }
  return model;
}

}  // namespace cmix
