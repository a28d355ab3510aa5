#include "cmix/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "json.hpp"

namespace cmix {

using nlohmann::json;

void TrainConfig::validate() const {
  if (lr <= 0.0) throw ValidationError("train config: lr must be > 0");
  if (optimizer != "sgd" && optimizer != "adamw") {
    throw ValidationError("train config: optimizer must be sgd or adamw");
  }
  if (scheduler_gamma <= 0.0 || scheduler_gamma > 1.0) {
    throw ValidationError("train config: scheduler_gamma must be in (0, 1]");
  }
  if (batch_size < 1) throw ValidationError("train config: batch_size must be >= 1");
  if (seq_len < 2) throw ValidationError("train config: seq_len must be >= 2");
  if (patience < 1) throw ValidationError("train config: patience must be >= 1");
  if (max_epochs < 0) throw ValidationError("train config: max_epochs must be >= 0");
  if (lambda < 0.0) throw ValidationError("train config: lambda must be >= 0");
  if (seeds.empty()) throw ValidationError("train config: need at least one seed");
}

EarlyStopper::EarlyStopper(int patience)
    : patience_(patience), best_metric_(-std::numeric_limits<double>::infinity()) {
  if (patience < 1) throw ValidationError("EarlyStopper: patience must be >= 1");
}

bool EarlyStopper::update(double metric, int epoch) {
  if (metric > best_metric_) {
    best_metric_ = metric;
    best_epoch_ = epoch;
    stale_ = 0;
    return false;
  }
  ++stale_;
  return stale_ >= patience_;
}

void save_history(const TrainHistory& history, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write '" + path + "'");
  for (const EpochRecord& e : history.epochs) {
    json f1 = json::object();
    for (const auto& [task, v] : e.val_f1) f1[to_string(task)] = v;
    out << json{{"epoch", e.epoch},
                {"train_loss", e.train_loss},
                {"lr", e.lr},
                {"val_f1", std::move(f1)}}
               .dump()
        << "\n";
  }
  out << json{{"chosen_epoch", history.chosen_epoch},
              {"wall_seconds", history.wall_seconds}}
             .dump()
      << "\n";
}

namespace {

MultiTaskBatch encode_rows(const std::vector<MultiTaskRow>& rows,
                           std::size_t begin, std::size_t end,
                           const Tokenizer& tokenizer) {
  MultiTaskBatch batch;
  for (std::size_t i = begin; i < end; ++i) {
    auto [ids, mask] = encode(tokenizer, rows[i].text, tokenizer.max_len);
    batch.token_ids.push_back(std::move(ids));
    batch.attention_mask.push_back(std::move(mask));
    for (const auto& [task, label] : rows[i].labels) {
      auto& column = batch.labels[task];
      column.resize(i - begin, kIgnoreLabel);
      column.push_back(label);
    }
    for (auto& [task, column] : batch.labels) {
      column.resize(i - begin + 1, kIgnoreLabel);
    }
  }
  return batch;
}

}  // namespace

std::map<Task, EvalReport> evaluate_model(const NeuralModel& model,
                                          const std::vector<MultiTaskRow>& rows,
                                          const Tokenizer& tokenizer,
                                          int batch_size) {
  if (batch_size < 1) throw ValidationError("evaluate_model: batch_size must be >= 1");
  std::map<Task, std::vector<int>> preds, golds;
  for (std::size_t begin = 0; begin < rows.size();
       begin += static_cast<std::size_t>(batch_size)) {
    const std::size_t end =
        std::min(rows.size(), begin + static_cast<std::size_t>(batch_size));
    const MultiTaskBatch batch = encode_rows(rows, begin, end, tokenizer);
    const std::map<Task, Mat> logits = model.forward(batch);
    for (const auto& [task, labels] : batch.labels) {
      const Mat& l = logits.at(task);
      for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == kIgnoreLabel) continue;
        const Eigen::Index r = static_cast<Eigen::Index>(i);
        preds[task].push_back(l(r, 1) > l(r, 0) ? 1 : 0);
        golds[task].push_back(labels[i]);
      }
    }
  }
  std::map<Task, EvalReport> out;
  for (const auto& [task, p] : preds) out[task] = prf1(p, golds.at(task));
  return out;
}

TrainHistory train(NeuralModel& model, const TrainData& data,
                   const Tokenizer& tokenizer, const TrainConfig& cfg,
                   const JointLossConfig& loss_cfg, Task primary,
                   std::uint64_t seed) {
  cfg.validate();
  if (data.train.empty() || data.val.empty()) {
    throw ValidationError("train: train and val sets must be non-empty");
  }
  const auto t0 = std::chrono::steady_clock::now();

  Tokenizer tok = tokenizer;
  tok.max_len = cfg.seq_len;

  const std::vector<Tensor*> params = model.params();
  std::unique_ptr<Optimizer> opt = make_optimizer(cfg.optimizer, cfg.lr);
  EarlyStopper stopper(cfg.patience);
  std::vector<Mat> best_params;
  TrainHistory history;
  double lr = cfg.lr;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    opt->set_lr(lr);
    const auto batches = batch_iter(data.train,
                                    static_cast<std::size_t>(cfg.batch_size),
                                    derive_seed(seed, 1000 + static_cast<std::uint64_t>(epoch)),
                                    tok);
    double loss_sum = 0.0;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      zero_grads(params);
      const LossBreakdown lb = model.forward_backward(batches[b], loss_cfg);
      if (!std::isfinite(lb.total)) {
        throw std::runtime_error("training diverged: non-finite loss at epoch " +
                                 std::to_string(epoch) + ", batch " +
                                 std::to_string(b + 1));
      }
      opt->step(params);
      loss_sum += lb.total;
    }

    const std::map<Task, EvalReport> val = evaluate_model(model, data.val, tok,
                                                          cfg.batch_size);
    EpochRecord record;
    record.epoch = epoch;
    record.train_loss =
        batches.empty() ? 0.0 : loss_sum / static_cast<double>(batches.size());
    record.lr = lr;
    for (const auto& [task, report] : val) record.val_f1[task] = report.f1;
    history.epochs.push_back(record);

    const auto primary_it = val.find(primary);
    if (primary_it == val.end()) {
      throw ValidationError("train: validation set has no labels for the primary task");
    }
    const bool stop = stopper.update(primary_it->second.f1, epoch);
    if (stopper.best_epoch() == epoch) {
      best_params.clear();
      best_params.reserve(params.size());
      for (const Tensor* t : params) best_params.push_back(t->v);
    }
    lr *= cfg.scheduler_gamma;
    if (stop) break;
  }

  if (!best_params.empty()) {
    for (std::size_t i = 0; i < params.size(); ++i) params[i]->v = best_params[i];
  }
  history.chosen_epoch = stopper.best_epoch();
  history.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return history;
}

SeedAggregate run_seeds(
    const std::function<std::unique_ptr<NeuralModel>(std::uint64_t)>& factory,
    const TrainData& data, const Tokenizer& tokenizer, const TrainConfig& cfg,
    const JointLossConfig& loss_cfg, Task primary) {
  cfg.validate();
  SeedAggregate agg;
  Tokenizer tok = tokenizer;
  tok.max_len = cfg.seq_len;
  for (const std::uint64_t seed : cfg.seeds) {
    std::unique_ptr<NeuralModel> model = factory(seed);
    SeedRunResult run;
    run.seed = seed;
    run.history = train(*model, data, tokenizer, cfg, loss_cfg, primary, seed);
    run.val_metrics = evaluate_model(*model, data.val, tok, cfg.batch_size);
    agg.runs.push_back(std::move(run));
  }
  for (const auto& [task, unused] : agg.runs.front().val_metrics) {
    double f1 = 0.0, precision = 0.0, recall = 0.0;
    for (const SeedRunResult& run : agg.runs) {
      const EvalReport& r = run.val_metrics.at(task);
      f1 += r.f1;
      precision += r.precision;
      recall += r.recall;
    }
    const double n = static_cast<double>(agg.runs.size());
    agg.mean_f1[task] = f1 / n;
    agg.mean_precision[task] = precision / n;
    agg.mean_recall[task] = recall / n;
  }
  return agg;
}

GradCheckReport grad_check(NeuralModel& model, const MultiTaskBatch& batch,
                           const JointLossConfig& loss_cfg, double step,
                           std::size_t min_coords, std::uint64_t seed) {
  if (step <= 0.0) throw ValidationError("grad_check: step must be > 0");
  const std::vector<Tensor*> params = model.params();
  zero_grads(params);
  model.forward_backward(batch, loss_cfg);

  GradCheckReport report;
  std::vector<Mat> analytic;
  analytic.reserve(params.size());
  std::size_t trainable_coords = 0;
  for (const Tensor* t : params) {
    analytic.push_back(t->g);
    if (!t->trainable) {
      if ((t->g.array() != 0.0).any()) report.frozen_exact_zero = false;
    } else {
      trainable_coords += static_cast<std::size_t>(t->g.size());
    }
  }
  if (trainable_coords == 0) {
    throw ValidationError("grad_check: model has no trainable parameters");
  }

  Rng rng(seed);
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Tensor* t = params[pi];
    if (!t->trainable) continue;
    const std::size_t size = static_cast<std::size_t>(t->v.size());
    const std::size_t quota =
        std::max<std::size_t>(1, (min_coords * size + trainable_coords - 1) /
                                     trainable_coords);
    for (std::size_t q = 0; q < quota; ++q) {
      const Eigen::Index r =
          static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(t->v.rows())));
      const Eigen::Index c =
          static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(t->v.cols())));
      const double orig = t->v(r, c);
      t->v(r, c) = orig + step;
      const double lp = model.loss_only(batch, loss_cfg);
      t->v(r, c) = orig - step;
      const double lm = model.loss_only(batch, loss_cfg);
      t->v(r, c) = orig;
      const double numeric = (lp - lm) / (2.0 * step);
      const double a = analytic[pi](r, c);
      const double rel =
          std::abs(a - numeric) / std::max(std::abs(a) + std::abs(numeric), 1e-6);
      report.max_rel_err = std::max(report.max_rel_err, rel);
      ++report.checked;
    }
  }
  return report;
}

}  // namespace cmix
