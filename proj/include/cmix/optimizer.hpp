#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "cmix/tensor.hpp"

namespace cmix {

// Applies one update from the accumulated gradients; frozen tensors are
// never touched.
class Optimizer {
 public:
  virtual ~Optimizer() = default;
  virtual void step(const std::vector<Tensor*>& params) = 0;

  void set_lr(double lr) { lr_ = lr; }
  double lr() const { return lr_; }

 protected:
  explicit Optimizer(double lr) : lr_(lr) {}
  double lr_;
};

class Sgd : public Optimizer {
 public:
  explicit Sgd(double lr) : Optimizer(lr) {}
  void step(const std::vector<Tensor*>& params) override;
};

// Decoupled weight decay; moments keyed by tensor name.
class AdamW : public Optimizer {
 public:
  explicit AdamW(double lr, double beta1 = 0.9, double beta2 = 0.999,
                 double eps = 1e-8, double weight_decay = 0.01)
      : Optimizer(lr),
        beta1_(beta1),
        beta2_(beta2),
        eps_(eps),
        weight_decay_(weight_decay) {}
  void step(const std::vector<Tensor*>& params) override;

 private:
  double beta1_, beta2_, eps_, weight_decay_;
  long t_ = 0;
  std::map<std::string, Mat> m_, v_;
};

std::unique_ptr<Optimizer> make_optimizer(const std::string& name, double lr);

}  // namespace cmix
