#include "socd/nn/fourier.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace socd::nn {

FourierTimeEmbedding::FourierTimeEmbedding(int num_features, double scale, Rng& rng)
    : scale_(scale) {
  if (num_features <= 0 || num_features % 2 != 0) {
    throw std::invalid_argument("FourierTimeEmbedding: num_features must be positive and even");
  }
  std::normal_distribution<double> n(0.0, 1.0);
  freqs_.resize(num_features / 2);
  for (double& w : freqs_) w = n(rng) * scale;
}

FourierTimeEmbedding::FourierTimeEmbedding(Vec frequencies, double scale)
    : freqs_(std::move(frequencies)), scale_(scale) {}

Vector FourierTimeEmbedding::embed(double t) const {
  return embed(std::span<const double>(&t, 1)).col(0);
}

Matrix FourierTimeEmbedding::embed(std::span<const double> t) const {
  const auto half = static_cast<Eigen::Index>(freqs_.size());
  Matrix out(2 * half, static_cast<Eigen::Index>(t.size()));
  for (Eigen::Index c = 0; c < out.cols(); ++c) {
    for (Eigen::Index k = 0; k < half; ++k) {
      const double angle = 2.0 * std::numbers::pi * freqs_[k] * t[c];
      out(k, c) = std::sin(angle);
      out(half + k, c) = std::cos(angle);
    }
  }
  return out;
}

}  // namespace socd::nn
