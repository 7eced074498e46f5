#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "socd/common.hpp"

namespace socd::nn {

using Matrix = Eigen::MatrixXd;  // batched values are column-per-sample
using Vector = Eigen::VectorXd;

enum class Activation : int { Identity = 0, Silu = 1, Relu = 2 };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

struct Layer {
  Matrix weight;  // out x in
  Vector bias;
  Activation act = Activation::Identity;
};

struct Gradients {
  std::vector<Matrix> weight;
  std::vector<Vector> bias;

  void add(const Gradients& other);
  void scale(double s);
  bool all_finite() const;
  double max_abs() const;
};

class DenseNet;

/// Values saved by a forward pass for the matching backward pass.
struct ForwardCache {
  std::vector<Matrix> inputs;  // input to each layer
  std::vector<Matrix> pre;     // pre-activation of each layer
  const DenseNet* owner = nullptr;
  std::uint64_t generation = 0;
};

/// Fully connected network: y = act_L(W_L ... act_1(W_1 x + b_1) ... + b_L).
class DenseNet {
 public:
  DenseNet() = default;
  /// Zero-initialised network. `sizes` has one more entry than `acts`.
  DenseNet(std::vector<int> sizes, std::vector<Activation> acts);
  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialisation for weights and biases.
  static DenseNet random(std::vector<int> sizes, std::vector<Activation> acts, Rng& rng);

  Matrix forward(const Matrix& x) const;
  Matrix forward(const Matrix& x, ForwardCache& cache) const;
  Vector forward(const Vector& x) const;

  /// Reverse-mode gradients of sum(upstream .* y) w.r.t. parameters, and
  /// optionally w.r.t. the input. Throws std::logic_error on a stale cache.
  Gradients backward(const ForwardCache& cache, const Matrix& upstream,
                     Matrix* input_grad = nullptr) const;

  Gradients zero_gradients() const;

  int input_dim() const;
  int output_dim() const;
  std::size_t num_layers() const { return layers_.size(); }
  std::vector<int> sizes() const;
  std::vector<Activation> activations() const;
  std::size_t param_count() const;

  const Layer& layer(std::size_t i) const { return layers_.at(i); }
  /// Mutable access invalidates outstanding forward caches.
  Layer& mutable_layer(std::size_t i);

  Vec flat_params() const;
  void set_flat_params(std::span<const double> params);
  bool all_finite() const;
  /// Content hash of shapes and parameter values.
  std::uint64_t hash() const;

  std::uint64_t generation() const { return generation_; }
  void touch();

 private:
  std::vector<Layer> layers_;
  std::uint64_t generation_ = 0;
};

}  // namespace socd::nn
