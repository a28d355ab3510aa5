#pragma once

#include <array>
#include <functional>
#include <map>
#include <memory>
#include <vector>

#include "cmix/corpus.hpp"
#include "cmix/eval.hpp"
#include "cmix/mtl.hpp"
#include "cmix/optimizer.hpp"

namespace cmix {

// Documented sweep grids; defaults below are drawn from them.
inline constexpr std::array<double, 6> kLrGrid = {2e-6, 2e-5, 2e-4,
                                                  3e-3, 9e-3, 1e-2};
inline constexpr std::array<double, 2> kGammaGrid = {0.9, 0.8};
inline constexpr std::array<int, 3> kBatchGrid = {16, 32, 64};
inline constexpr std::array<int, 3> kSeqLenGrid = {64, 128, 248};
inline constexpr std::array<double, 5> kLambdaGrid = {0.0, 5e-1, 5e-2, 5e-3,
                                                      5e-4};
inline constexpr std::array<int, 5> kShotGrid = {0, 2, 4, 8, 12};

struct TrainConfig {
  double lr = 2e-4;
  std::string optimizer = "adamw";  // sgd | adamw
  double scheduler_gamma = 0.9;     // per-epoch exponential decay
  int batch_size = 32;
  int seq_len = 64;
  int patience = 4;
  int max_epochs = 30;
  std::vector<std::uint64_t> seeds = {13, 42, 2025};
  double lambda = 0.0;

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  std::map<Task, double> val_f1;
  double lr = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  int chosen_epoch = 0;  // 1-based; 0 when no epoch ran
  double wall_seconds = 0.0;
};

void save_history(const TrainHistory& history, const std::string& path);

// Tracks the best metric under strict improvement; stop() becomes true once
// `patience` consecutive epochs fail to improve it.
class EarlyStopper {
 public:
  explicit EarlyStopper(int patience);
  // Records an epoch's metric; returns true when training should stop.
  bool update(double metric, int epoch);
  int best_epoch() const { return best_epoch_; }
  double best_metric() const { return best_metric_; }

 private:
  int patience_;
  int stale_ = 0;
  int best_epoch_ = 0;
  double best_metric_;
};

struct TrainData {
  std::vector<MultiTaskRow> train;
  std::vector<MultiTaskRow> val;
};

// Full-batch argmax predictions per task over rows that carry a real label
// for that task; rows are processed in order.
std::map<Task, EvalReport> evaluate_model(const NeuralModel& model,
                                          const std::vector<MultiTaskRow>& rows,
                                          const Tokenizer& tokenizer,
                                          int batch_size);

// Epoch loop with per-epoch lr decay, early stopping on the primary task's
// validation F1, and best-epoch parameter restore. Deterministic per seed.
// Aborts with a diagnostic on non-finite loss.
TrainHistory train(NeuralModel& model, const TrainData& data,
                   const Tokenizer& tokenizer, const TrainConfig& cfg,
                   const JointLossConfig& loss_cfg, Task primary,
                   std::uint64_t seed);

struct SeedRunResult {
  std::uint64_t seed = 0;
  std::map<Task, EvalReport> val_metrics;
  TrainHistory history;
};

struct SeedAggregate {
  std::vector<SeedRunResult> runs;
  std::map<Task, double> mean_f1;
  std::map<Task, double> mean_precision;
  std::map<Task, double> mean_recall;
};

// Builds a fresh model per seed, trains it, and averages val metrics.
// The factory owns seeding of the model parameters.
SeedAggregate run_seeds(
    const std::function<std::unique_ptr<NeuralModel>(std::uint64_t)>& factory,
    const TrainData& data, const Tokenizer& tokenizer, const TrainConfig& cfg,
    const JointLossConfig& loss_cfg, Task primary);

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::size_t checked = 0;
  bool frozen_exact_zero = true;
};

// Central-difference check of the analytic joint-loss gradient on at least
// min_coords coordinates, sampled across every trainable tensor. Frozen
// tensors are verified to hold exact-zero gradients.
GradCheckReport grad_check(NeuralModel& model, const MultiTaskBatch& batch,
                           const JointLossConfig& loss_cfg, double step,
                           std::size_t min_coords, std::uint64_t seed);

}  // namespace cmix
