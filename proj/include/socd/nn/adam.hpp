#pragma once

#include "socd/nn/dense_net.hpp"

namespace socd::nn {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adaptive-moment optimiser state for one network.
class Adam {
 public:
  Adam() = default;
  Adam(const DenseNet& net, AdamConfig config);

  /// Bias-corrected Adam update. Throws std::runtime_error naming the layer if
  /// any gradient entry is NaN/Inf; the network is left untouched in that case.
  void step(DenseNet& net, const Gradients& grads);

  long step_count() const { return steps_; }
  const AdamConfig& config() const { return config_; }
  void set_lr(double lr) { config_.lr = lr; }
  const Gradients& first_moment() const { return m_; }
  const Gradients& second_moment() const { return v_; }

 private:
  AdamConfig config_;
  Gradients m_;
  Gradients v_;
  long steps_ = 0;
};

}  // namespace socd::nn
