#pragma once

#include <limits>
#include <vector>

#include "sedg/nn/layers.hpp"

namespace sedg::nn {

class Adam {
 public:
  explicit Adam(std::vector<Param*> params, double lr = 1e-3, double beta1 = 0.9,
                double beta2 = 0.999, double eps = 1e-8);

  void zero_grad();
  void step();
  double learning_rate() const { return lr_; }
  void set_learning_rate(double lr) { lr_ = lr; }

 private:
  std::vector<Param*> params_;
  std::vector<Matrix> m_, v_;
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
};

/// Multiplies the learning rate by `factor` once the monitored loss has
/// failed to improve (relative threshold 1e-4) for `patience` consecutive
/// observations, then resets its counter.
class PlateauScheduler {
 public:
  PlateauScheduler(std::size_t patience, double factor);

  /// Returns the new learning rate given the current one and the latest loss.
  double observe(double loss, double current_lr);
  std::size_t bad_epochs() const { return bad_; }
  double best() const { return best_; }

 private:
  std::size_t patience_;
  double factor_;
  double best_ = std::numeric_limits<double>::infinity();
  std::size_t bad_ = 0;
};

}  // namespace sedg::nn
