#include "socd/nn/dense_net.hpp"

#include <atomic>
#include <cmath>
#include <stdexcept>

namespace socd::nn {

namespace {

std::uint64_t next_generation() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1, std::memory_order_relaxed);
}

Matrix apply(Activation a, const Matrix& z) {
  switch (a) {
    case Activation::Identity:
      return z;
    case Activation::Silu:
      return z.array() / (1.0 + (-z.array()).exp());
    case Activation::Relu:
      return z.array().max(0.0);
  }
  throw std::logic_error("unknown activation");
}

// Elementwise derivative of the activation at the pre-activation z.
Matrix derivative(Activation a, const Matrix& z) {
  switch (a) {
    case Activation::Identity:
      return Matrix::Ones(z.rows(), z.cols());
    case Activation::Silu: {
      const Eigen::ArrayXXd s = 1.0 / (1.0 + (-z.array()).exp());
      return s * (1.0 + z.array() * (1.0 - s));
    }
    case Activation::Relu:
      return (z.array() > 0.0).cast<double>();
  }
  throw std::logic_error("unknown activation");
}

}  // namespace

std::string to_string(Activation a) {
  switch (a) {
    case Activation::Identity: return "identity";
    case Activation::Silu: return "silu";
    case Activation::Relu: return "relu";
  }
  return "unknown";
}

Activation activation_from_string(const std::string& s) {
  if (s == "identity") return Activation::Identity;
  if (s == "silu") return Activation::Silu;
  if (s == "relu") return Activation::Relu;
  throw std::invalid_argument("unknown activation: " + s);
}

void Gradients::add(const Gradients& other) {
  for (std::size_t l = 0; l < weight.size(); ++l) {
    weight[l] += other.weight[l];
    bias[l] += other.bias[l];
  }
}

void Gradients::scale(double s) {
  for (std::size_t l = 0; l < weight.size(); ++l) {
    weight[l] *= s;
    bias[l] *= s;
  }
}

bool Gradients::all_finite() const {
  for (std::size_t l = 0; l < weight.size(); ++l) {
    if (!weight[l].allFinite() || !bias[l].allFinite()) return false;
  }
  return true;
}

double Gradients::max_abs() const {
  double m = 0.0;
  for (std::size_t l = 0; l < weight.size(); ++l) {
    if (weight[l].size() > 0) m = std::max(m, weight[l].cwiseAbs().maxCoeff());
    if (bias[l].size() > 0) m = std::max(m, bias[l].cwiseAbs().maxCoeff());
  }
  return m;
}

DenseNet::DenseNet(std::vector<int> sizes, std::vector<Activation> acts) {
  if (sizes.size() < 2 || acts.size() + 1 != sizes.size()) {
    throw std::invalid_argument("DenseNet: need sizes.size() == acts.size() + 1 >= 2");
  }
  for (int s : sizes) {
    if (s <= 0) throw std::invalid_argument("DenseNet: layer sizes must be positive");
  }
  for (std::size_t l = 0; l < acts.size(); ++l) {
    layers_.push_back({Matrix::Zero(sizes[l + 1], sizes[l]), Vector::Zero(sizes[l + 1]), acts[l]});
  }
  generation_ = next_generation();
}

DenseNet DenseNet::random(std::vector<int> sizes, std::vector<Activation> acts, Rng& rng) {
  DenseNet net(std::move(sizes), std::move(acts));
  for (auto& layer : net.layers_) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer.weight.cols()));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
      for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) layer.weight(r, c) = u(rng);
    }
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) layer.bias(r) = u(rng);
  }
  return net;
}

Matrix DenseNet::forward(const Matrix& x) const {
  if (layers_.empty()) throw std::logic_error("forward: empty network");
  if (x.rows() != input_dim()) {
    throw std::invalid_argument("forward: input has " + std::to_string(x.rows()) +
                                " rows, network expects " + std::to_string(input_dim()));
  }
  Matrix h = x;
  for (const auto& layer : layers_) {
    Matrix z = layer.weight * h;
    z.colwise() += layer.bias;
    h = apply(layer.act, z);
  }
  return h;
}

Vector DenseNet::forward(const Vector& x) const {
  return forward(Matrix(x)).col(0);
}

Matrix DenseNet::forward(const Matrix& x, ForwardCache& cache) const {
  if (layers_.empty()) throw std::logic_error("forward: empty network");
  if (x.rows() != input_dim()) {
    throw std::invalid_argument("forward: input has " + std::to_string(x.rows()) +
                                " rows, network expects " + std::to_string(input_dim()));
  }
  cache.inputs.resize(layers_.size());
  cache.pre.resize(layers_.size());
  Matrix h = x;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    cache.inputs[l] = h;
    Matrix z = layers_[l].weight * h;
    z.colwise() += layers_[l].bias;
    h = apply(layers_[l].act, z);
    cache.pre[l] = std::move(z);
  }
  cache.owner = this;
  cache.generation = generation_;
  return h;
}

Gradients DenseNet::backward(const ForwardCache& cache, const Matrix& upstream,
                             Matrix* input_grad) const {
  if (cache.owner != this || cache.generation != generation_ ||
      cache.inputs.size() != layers_.size()) {
    throw std::logic_error("backward: stale forward cache (parameters changed or other network)");
  }
  if (upstream.rows() != output_dim() || upstream.cols() != cache.inputs.front().cols()) {
    throw std::invalid_argument("backward: upstream gradient shape mismatch");
  }
  Gradients g = zero_gradients();
  Matrix delta = upstream;
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const Matrix dz = delta.cwiseProduct(derivative(layers_[l].act, cache.pre[l]));
    g.weight[l].noalias() = dz * cache.inputs[l].transpose();
    g.bias[l] = dz.rowwise().sum();
    if (l > 0 || input_grad != nullptr) delta.noalias() = layers_[l].weight.transpose() * dz;
  }
  if (input_grad != nullptr) *input_grad = std::move(delta);
  return g;
}

Gradients DenseNet::zero_gradients() const {
  Gradients g;
  for (const auto& layer : layers_) {
    g.weight.push_back(Matrix::Zero(layer.weight.rows(), layer.weight.cols()));
    g.bias.push_back(Vector::Zero(layer.bias.size()));
  }
  return g;
}

int DenseNet::input_dim() const {
  return layers_.empty() ? 0 : static_cast<int>(layers_.front().weight.cols());
}

int DenseNet::output_dim() const {
  return layers_.empty() ? 0 : static_cast<int>(layers_.back().weight.rows());
}

std::vector<int> DenseNet::sizes() const {
  std::vector<int> s;
  if (layers_.empty()) return s;
  s.push_back(input_dim());
  for (const auto& layer : layers_) s.push_back(static_cast<int>(layer.weight.rows()));
  return s;
}

std::vector<Activation> DenseNet::activations() const {
  std::vector<Activation> a;
  for (const auto& layer : layers_) a.push_back(layer.act);
  return a;
}

std::size_t DenseNet::param_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers_) n += layer.weight.size() + layer.bias.size();
  return n;
}

Layer& DenseNet::mutable_layer(std::size_t i) {
  touch();
  return layers_.at(i);
}

void DenseNet::touch() { generation_ = next_generation(); }

Vec DenseNet::flat_params() const {
  Vec out;
  out.reserve(param_count());
  for (const auto& layer : layers_) {
    out.insert(out.end(), layer.weight.data(), layer.weight.data() + layer.weight.size());
    out.insert(out.end(), layer.bias.data(), layer.bias.data() + layer.bias.size());
  }
  return out;
}

void DenseNet::set_flat_params(std::span<const double> params) {
  if (params.size() != param_count()) {
    throw std::invalid_argument("set_flat_params: expected " + std::to_string(param_count()) +
                                " values, got " + std::to_string(params.size()));
  }
  std::size_t k = 0;
  for (auto& layer : layers_) {
    std::copy_n(params.begin() + k, layer.weight.size(), layer.weight.data());
    k += layer.weight.size();
    std::copy_n(params.begin() + k, layer.bias.size(), layer.bias.data());
    k += layer.bias.size();
  }
  touch();
}

bool DenseNet::all_finite() const {
  for (const auto& layer : layers_) {
    if (!layer.weight.allFinite() || !layer.bias.allFinite()) return false;
  }
  return true;
}

std::uint64_t DenseNet::hash() const {
  Vec shape;
  for (int s : sizes()) shape.push_back(s);
  for (auto a : activations()) shape.push_back(static_cast<int>(a));
  const std::uint64_t h = fnv1a64(std::span<const double>(shape));
  const Vec p = flat_params();
  return fnv1a64(std::span<const double>(p)) ^ (h * 0x9e3779b97f4a7c15ULL);
}

}  // namespace socd::nn
