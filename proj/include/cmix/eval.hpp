#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cmix/common.hpp"

namespace cmix {

// Positive-class metrics. Counts always partition the sample count.
struct EvalReport {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::optional<double> p_value;
};

std::string to_json(const EvalReport& report);

// Precision/recall/F1 of label 1. F1 = 2PR/(P+R), 0 when P+R = 0.
EvalReport prf1(const std::vector<int>& preds, const std::vector<int>& golds);

// Two-sided approximate-randomization test on the positive-class F1
// difference: each permutation swaps the two systems' predictions per sample
// with probability 1/2; p = (1 + #{|d_perm| >= |d_obs|}) / (1 + n_perm).
double significance(const std::vector<int>& preds_a, const std::vector<int>& preds_b,
                    const std::vector<int>& golds, std::size_t n_perm,
                    std::uint64_t seed);

// One prediction record per line: {id, task, pred, prob}.
struct Prediction {
  std::string id;
  Task task = Task::humor;
  int pred = 0;
  double prob = 0.0;
};

void save_predictions(const std::vector<Prediction>& preds, const std::string& path);
std::vector<Prediction> load_predictions(const std::string& path);

}  // namespace cmix
