#pragma once

#include <cmath>
#include <span>
#include <stdexcept>

#include <json.hpp>

#include "socd/nn/dense_net.hpp"

namespace socd::nn {

/// Per-feature affine standardisation (x - mean) / scale. Constant features keep scale 1.
struct Normalizer {
  Vec mean;
  Vec scale;

  static Normalizer identity(std::size_t dim);
  static Normalizer fit(std::span<const Vec> rows);
  /// Fit over the columns of x (one sample per column).
  static Normalizer fit_columns(const Matrix& x);

  std::size_t dim() const { return mean.size(); }
  Matrix apply(const Matrix& x) const;

  nlohmann::json to_json() const { return {{"mean", mean}, {"scale", scale}}; }
  static Normalizer from_json(const nlohmann::json& j) {
    return {j.at("mean").get<Vec>(), j.at("scale").get<Vec>()};
  }
};

inline Normalizer Normalizer::identity(std::size_t dim) { return {Vec(dim, 0.0), Vec(dim, 1.0)}; }

inline Normalizer Normalizer::fit(std::span<const Vec> rows) {
  if (rows.empty()) throw std::invalid_argument("Normalizer::fit: no rows");
  const std::size_t d = rows.front().size();
  Normalizer n{Vec(d, 0.0), Vec(d, 0.0)};
  for (const auto& r : rows) {
    for (std::size_t k = 0; k < d; ++k) n.mean[k] += r[k];
  }
  for (double& m : n.mean) m /= static_cast<double>(rows.size());
  for (const auto& r : rows) {
    for (std::size_t k = 0; k < d; ++k) n.scale[k] += (r[k] - n.mean[k]) * (r[k] - n.mean[k]);
  }
  for (double& s : n.scale) {
    s = std::sqrt(s / static_cast<double>(rows.size()));
    if (s < 1e-8) s = 1.0;
  }
  return n;
}

inline Normalizer Normalizer::fit_columns(const Matrix& x) {
  if (x.cols() == 0) throw std::invalid_argument("Normalizer::fit_columns: no samples");
  Normalizer n{Vec(x.rows()), Vec(x.rows())};
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double m = x.row(r).mean();
    const double s = std::sqrt((x.row(r).array() - m).square().mean());
    n.mean[r] = m;
    n.scale[r] = s < 1e-8 ? 1.0 : s;
  }
  return n;
}

inline Matrix Normalizer::apply(const Matrix& x) const {
  if (static_cast<std::size_t>(x.rows()) != dim()) {
    throw std::invalid_argument("Normalizer::apply: dimension mismatch");
  }
  Matrix out(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    out.row(r) = (x.row(r).array() - mean[r]) / scale[r];
  }
  return out;
}

}  // namespace socd::nn
