#pragma once

#include <span>

#include <json.hpp>

#include "socd/nn/dense_net.hpp"

namespace socd::core {

using nn::Matrix;

enum class SelectionMode { ImportanceSampling, Argmax };

struct SelectionConfig {
  SelectionMode mode = SelectionMode::ImportanceSampling;
  double temperature = 100.0;  // alpha in w_k ~ exp(alpha Q_k)
  int samples = 64;            // K behaviour candidates per state
  int steps = 10;              // ODE solver steps

  /// Throws ConfigError on K < 1, steps < 1, or a non-positive temperature.
  void validate() const;
  nlohmann::json to_json() const;
  static SelectionConfig from_json(const nlohmann::json& j);
};

/// Softmax of temperature * q, computed with the maximum subtracted.
Vec selection_weights(std::span<const double> q, double temperature);

/// First index of the largest entry.
std::size_t argmax_index(std::span<const double> q);

/// sum_k w_k a_k over the columns of `candidates`.
Vec combine(const Matrix& candidates, std::span<const double> weights);

/// Final action among K candidate columns with critic values q.
Vec select_from(const Matrix& candidates, std::span<const double> q, const SelectionConfig& config);

}  // namespace socd::core
