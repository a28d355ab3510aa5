#include "cmix/optimizer.hpp"

#include <cmath>

#include "cmix/common.hpp"

namespace cmix {

void Sgd::step(const std::vector<Tensor*>& params) {
  for (Tensor* t : params) {
    if (!t->trainable) continue;
    t->v -= lr_ * t->g;
  }
}

void AdamW::step(const std::vector<Tensor*>& params) {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (Tensor* t : params) {
    if (!t->trainable) continue;
    Mat& m = m_.try_emplace(t->name, Mat::Zero(t->v.rows(), t->v.cols()))
                 .first->second;
    Mat& v = v_.try_emplace(t->name, Mat::Zero(t->v.rows(), t->v.cols()))
                 .first->second;
    m = beta1_ * m + (1.0 - beta1_) * t->g;
    v = beta2_ * v + (1.0 - beta2_) * t->g.cwiseProduct(t->g);
    const Mat mhat = m / bc1;
    const Mat vhat = v / bc2;
    t->v.array() -= lr_ * (mhat.array() / (vhat.array().sqrt() + eps_) +
                           weight_decay_ * t->v.array());
  }
}

std::unique_ptr<Optimizer> make_optimizer(const std::string& name, double lr) {
  if (lr <= 0.0) throw ValidationError("optimizer lr must be > 0");
  if (name == "sgd") return std::make_unique<Sgd>(lr);
  if (name == "adamw") return std::make_unique<AdamW>(lr);
  throw ValidationError("unknown optimizer '" + name + "' (expected sgd or adamw)");
}

}  // namespace cmix
