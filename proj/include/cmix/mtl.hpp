#pragma once

#include <map>
#include <memory>
#include <vector>

#include "cmix/encoder.hpp"

namespace cmix {

// Inverse-frequency class weights: the positive class carries N/(P+N) and
// the negative class P/(P+N), so the rarer class weighs more.
struct TaskLossSpec {
  double w_neg = 1.0;
  double w_pos = 1.0;

  static TaskLossSpec from_counts(std::size_t positives, std::size_t negatives);
  void validate() const;
};

enum class RegLayer { last, second_last };

struct JointLossConfig {
  double lambda = 0.0;
  RegLayer reg_layer = RegLayer::last;
  std::map<Task, TaskLossSpec> task_specs;
};

struct LossBreakdown {
  double total = 0.0;
  std::map<Task, double> per_task;
  double reg = 0.0;
};

// alpha = sigmoid(W_g . concat(h_bert, h_task) + b_g);
// output = alpha .* h_bert + (1 - alpha) .* h_task.
Vec gate(const Vec& h_bert, const Vec& h_task, const Mat& w_g, const Vec& b_g);

// Class-weighted cross-entropy over rows whose label is not kIgnoreLabel,
// averaged over those rows; 0 when none. If dlogits is non-null it receives
// the gradient (zero rows for ignored labels).
double weighted_ce(const Mat& logits, const std::vector<int>& labels,
                   const TaskLossSpec& spec, Mat* dlogits);

// lambda * sum over unordered task pairs of ||W_i - W_j||_F. If accumulate
// is true, gradients are added into the tensors.
double sharing_penalty(std::map<Task, Tensor*>& reg_mats, double lambda,
                       bool accumulate);

// Common surface for trainable classifiers built on the encoder.
class NeuralModel {
 public:
  virtual ~NeuralModel() = default;
  virtual std::vector<Tensor*> params() = 0;
  virtual std::vector<Task> tasks() const = 0;
  // Logits [batch x 2] per task.
  virtual std::map<Task, Mat> forward(const MultiTaskBatch& batch) const = 0;
  // Accumulates gradients of the joint loss into params().
  virtual LossBreakdown forward_backward(const MultiTaskBatch& batch,
                                         const JointLossConfig& cfg) = 0;
  virtual double loss_only(const MultiTaskBatch& batch,
                           const JointLossConfig& cfg) const;
};

struct GatedMtlConfig {
  EncoderConfig enc;
  std::vector<Task> task_list{Task::humor, Task::sarcasm, Task::hate};
  bool gate_enabled = true;
};

// Bottom module feeding a shared top replica (h_bert) and one top replica per
// task (h_task_t); a per-task gate fuses the two and a linear head scores
// them. gate_enabled=false routes h_task_t straight to the head.
class GatedMtlModel : public NeuralModel {
 public:
  GatedMtlModel(const GatedMtlConfig& cfg, Rng& rng);

  std::vector<Tensor*> params() override;
  std::vector<Task> tasks() const override { return cfg_.task_list; }
  std::map<Task, Mat> forward(const MultiTaskBatch& batch) const override;
  LossBreakdown forward_backward(const MultiTaskBatch& batch,
                                 const JointLossConfig& cfg) override;
  // Adds the sharing penalty on top of the cross-entropy terms.
  double loss_only(const MultiTaskBatch& batch,
                   const JointLossConfig& cfg) const override;

  // Marks embeddings and layers 0..B-1 non-trainable.
  void freeze_bottom();

  const GatedMtlConfig& config() const { return cfg_; }
  bool gate_enabled() const { return cfg_.gate_enabled; }
  // The weight matrix the sharing penalty compares across tasks: the FFN
  // down-projection of the chosen top layer.
  Tensor& reg_matrix(Task t, RegLayer which);

  EncoderParams encoder;  // bottom layers 0..B-1 plus shared top B..L-1
  std::map<Task, std::vector<EncoderLayer>> task_tops;
  struct GateParams {
    Tensor w;  // D x 2D
    Tensor b;  // 1 x D
  };
  std::map<Task, GateParams> gates;
  struct HeadParams {
    Tensor w;  // 2 x D
    Tensor b;  // 1 x 2
  };
  std::map<Task, HeadParams> heads;

 private:
  struct ForwardCache;
  void run_forward(const MultiTaskBatch& batch, ForwardCache& fc) const;

  GatedMtlConfig cfg_;
};

// Conventional single-task fine-tuning baseline: full encoder stack, CLS
// pooling, one linear head.
class SingleTaskModel : public NeuralModel {
 public:
  SingleTaskModel(const EncoderConfig& cfg, Task task, Rng& rng);

  std::vector<Tensor*> params() override;
  std::vector<Task> tasks() const override { return {task_}; }
  std::map<Task, Mat> forward(const MultiTaskBatch& batch) const override;
  LossBreakdown forward_backward(const MultiTaskBatch& batch,
                                 const JointLossConfig& cfg) override;

  // Freezes embeddings and layers 0..k-1, leaving the top L-k layers
  // trainable.
  void freeze_layers(int k);
  Task task() const { return task_; }

  EncoderParams encoder;
  Tensor head_w;  // 2 x D
  Tensor head_b;  // 1 x 2

 private:
  struct ForwardCache;
  void run_forward(const MultiTaskBatch& batch, ForwardCache& fc) const;

  Task task_;
};

}  // namespace cmix
