#include "socd/nn/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace socd::nn {

Adam::Adam(const DenseNet& net, AdamConfig config)
    : config_(config), m_(net.zero_gradients()), v_(net.zero_gradients()) {}

void Adam::step(DenseNet& net, const Gradients& grads) {
  if (grads.weight.size() != net.num_layers() || m_.weight.size() != net.num_layers()) {
    throw std::invalid_argument("Adam::step: gradient/optimiser shape does not match network");
  }
  for (std::size_t l = 0; l < grads.weight.size(); ++l) {
    if (grads.weight[l].rows() != net.layer(l).weight.rows() ||
        grads.weight[l].cols() != net.layer(l).weight.cols() ||
        grads.bias[l].size() != net.layer(l).bias.size()) {
      throw std::invalid_argument("Adam::step: gradient shape mismatch at layer " +
                                  std::to_string(l));
    }
    if (!grads.weight[l].allFinite() || !grads.bias[l].allFinite()) {
      throw std::runtime_error("Adam::step: non-finite gradient in layer " + std::to_string(l) +
                               " at step " + std::to_string(steps_ + 1));
    }
  }
  ++steps_;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
  const double lr = config_.lr;
  const double eps = config_.eps;
  auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
    param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  };
  for (std::size_t l = 0; l < grads.weight.size(); ++l) {
    Layer& layer = net.mutable_layer(l);
    update(layer.weight, m_.weight[l], v_.weight[l], grads.weight[l]);
    update(layer.bias, m_.bias[l], v_.bias[l], grads.bias[l]);
  }
}

}  // namespace socd::nn
