#pragma once

#include "socd/nn/dense_net.hpp"

namespace socd::nn {

/// Gaussian Fourier projection of a scalar time: [sin(2*pi*w*t), cos(2*pi*w*t)]
/// with w ~ N(0, scale^2) drawn once. Frequencies are never trained.
class FourierTimeEmbedding {
 public:
  FourierTimeEmbedding() = default;
  FourierTimeEmbedding(int num_features, double scale, Rng& rng);
  FourierTimeEmbedding(Vec frequencies, double scale);

  int num_features() const { return static_cast<int>(2 * freqs_.size()); }
  double scale() const { return scale_; }
  const Vec& frequencies() const { return freqs_; }

  Vector embed(double t) const;
  /// One column per time value.
  Matrix embed(std::span<const double> t) const;

 private:
  Vec freqs_;
  double scale_ = 1.0;
};

}  // namespace socd::nn
