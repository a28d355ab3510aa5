#pragma once

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace cmix {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// Named parameter with its gradient accumulator. Frozen (non-trainable)
// tensors keep exact-zero gradients and are skipped by optimizers.
struct Tensor {
  std::string name;
  Mat v;
  Mat g;
  bool trainable = true;

  Tensor() = default;
  Tensor(std::string n, Eigen::Index rows, Eigen::Index cols, bool train = true)
      : name(std::move(n)),
        v(Mat::Zero(rows, cols)),
        g(Mat::Zero(rows, cols)),
        trainable(train) {}

  void zero_grad() { g.setZero(); }
};

inline void zero_grads(const std::vector<Tensor*>& params) {
  for (Tensor* t : params) t->zero_grad();
}

}  // namespace cmix
