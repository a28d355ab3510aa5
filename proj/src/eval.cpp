#include "cmix/eval.hpp"

#include <cmath>
#include <fstream>

#include "cmix/rng.hpp"
#include "cmix/text.hpp"
#include "json.hpp"

namespace cmix {

using nlohmann::json;

std::string to_json(const EvalReport& report) {
  json j{{"tp", report.tp},
         {"fp", report.fp},
         {"fn", report.fn},
         {"tn", report.tn},
         {"precision", report.precision},
         {"recall", report.recall},
         {"f1", report.f1}};
  if (report.p_value) j["p_value"] = *report.p_value;
  return j.dump(2);
}

namespace {

void check_binary(const std::vector<int>& v, const char* name) {
  for (int x : v) {
    if (x != 0 && x != 1) {
      throw ValidationError(std::string(name) + " must contain only 0/1 labels");
    }
  }
}

double f1_of(const std::vector<int>& preds, const std::vector<int>& golds) {
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i] == 1 && golds[i] == 1) ++tp;
    if (preds[i] == 1 && golds[i] == 0) ++fp;
    if (preds[i] == 0 && golds[i] == 1) ++fn;
  }
  const double denom = static_cast<double>(2 * tp + fp + fn);
  return denom == 0.0 ? 0.0 : 2.0 * static_cast<double>(tp) / denom;
}

}  // namespace

EvalReport prf1(const std::vector<int>& preds, const std::vector<int>& golds) {
  if (preds.empty()) throw ValidationError("prf1: empty prediction vector");
  if (preds.size() != golds.size()) {
    throw ValidationError("prf1: prediction/gold length mismatch");
  }
  check_binary(preds, "prf1: predictions");
  check_binary(golds, "prf1: golds");

  EvalReport r;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i] == 1 && golds[i] == 1) ++r.tp;
    if (preds[i] == 1 && golds[i] == 0) ++r.fp;
    if (preds[i] == 0 && golds[i] == 1) ++r.fn;
    if (preds[i] == 0 && golds[i] == 0) ++r.tn;
  }
  r.precision =
      r.tp + r.fp == 0 ? 0.0 : static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fp);
  r.recall =
      r.tp + r.fn == 0 ? 0.0 : static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fn);
  r.f1 = r.precision + r.recall == 0.0
             ? 0.0
             : 2.0 * r.precision * r.recall / (r.precision + r.recall);
  return r;
}

double significance(const std::vector<int>& preds_a, const std::vector<int>& preds_b,
                    const std::vector<int>& golds, std::size_t n_perm,
                    std::uint64_t seed) {
  if (preds_a.size() != golds.size() || preds_b.size() != golds.size()) {
    throw ValidationError("significance: prediction/gold length mismatch");
  }
  if (golds.empty()) throw ValidationError("significance: empty inputs");
  if (n_perm < 1000) throw ValidationError("significance: n_perm must be >= 1000");
  check_binary(preds_a, "significance: preds_a");
  check_binary(preds_b, "significance: preds_b");
  check_binary(golds, "significance: golds");

  const double d_obs = std::abs(f1_of(preds_a, golds) - f1_of(preds_b, golds));
  Rng rng(seed);
  std::vector<int> a(preds_a.size()), b(preds_b.size());
  std::size_t hits = 0;
  for (std::size_t p = 0; p < n_perm; ++p) {
    for (std::size_t i = 0; i < golds.size(); ++i) {
      const bool swap = rng.uniform() < 0.5;
      a[i] = swap ? preds_b[i] : preds_a[i];
      b[i] = swap ? preds_a[i] : preds_b[i];
    }
    const double d = std::abs(f1_of(a, golds) - f1_of(b, golds));
    if (d >= d_obs) ++hits;
  }
  return static_cast<double>(1 + hits) / static_cast<double>(1 + n_perm);
}

void save_predictions(const std::vector<Prediction>& preds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write '" + path + "'");
  for (const Prediction& p : preds) {
    out << json{{"id", p.id},
                {"task", to_string(p.task)},
                {"pred", p.pred},
                {"prob", p.prob}}
               .dump()
        << "\n";
  }
}

std::vector<Prediction> load_predictions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  std::vector<Prediction> preds;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim_whitespace(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(path + ":" + std::to_string(line_no) +
                       ": malformed record: " + e.what());
    }
    Prediction p;
    p.id = j.at("id").get<std::string>();
    p.task = task_from_string(j.at("task").get<std::string>());
    p.pred = j.at("pred").get<int>();
    if (p.pred != 0 && p.pred != 1) {
      throw ValidationError(path + ":" + std::to_string(line_no) +
                            ": pred must be 0 or 1");
    }
    p.prob = j.value("prob", 0.0);
    preds.push_back(std::move(p));
  }
  return preds;
}

}  // namespace cmix
