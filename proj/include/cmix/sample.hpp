#pragma once

#include <map>
#include <string>
#include <vector>

#include "cmix/common.hpp"

namespace cmix {

// One labeled text instance. `label` is 0, 1 or kIgnoreLabel.
struct Sample {
  std::string id;
  std::string text;
  Task task = Task::humor;
  int label = 0;
  Origin origin = Origin::code_mixed;
  std::string dataset;
};

// Ratios must sum to 1.
struct SplitSpec {
  double train_ratio = 0.8;
  double val_ratio = 0.1;
  double test_ratio = 0.1;
  std::uint64_t seed = 0;

  void validate() const {
    auto in_unit = [](double r) { return r >= 0.0 && r <= 1.0; };
    if (!in_unit(train_ratio) || !in_unit(val_ratio) || !in_unit(test_ratio)) {
      throw ValidationError("split ratios must lie in [0, 1]");
    }
    const double sum = train_ratio + val_ratio + test_ratio;
    if (std::abs(sum - 1.0) > 1e-9) {
      throw ValidationError("split ratios must sum to 1");
    }
  }
};

// One row of the restructured multi-task dataset: tasks the sample does not
// belong to carry kIgnoreLabel.
struct MultiTaskRow {
  std::string text;
  std::map<Task, int> labels;
};

// Token-id matrix with attention mask and per-task label vectors.
struct MultiTaskBatch {
  std::vector<std::vector<int>> token_ids;           // [batch][seq_len]
  std::vector<std::vector<int>> attention_mask;      // [batch][seq_len], 0/1
  std::map<Task, std::vector<int>> labels;           // task -> [batch]

  std::size_t size() const { return token_ids.size(); }
  std::size_t seq_len() const {
    return token_ids.empty() ? 0 : token_ids.front().size();
  }
};

}  // namespace cmix
