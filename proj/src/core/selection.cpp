#include "socd/core/selection.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace socd::core {

using nlohmann::json;

void SelectionConfig::validate() const {
  if (samples < 1) throw ConfigError("selection.samples must be >= 1");
  if (steps < 1) throw ConfigError("selection.steps must be >= 1");
  if (mode == SelectionMode::ImportanceSampling && !(temperature > 0.0)) {
    throw ConfigError("selection.temperature must be > 0 for importance sampling");
  }
}

json SelectionConfig::to_json() const {
  return {{"mode", mode == SelectionMode::Argmax ? "argmax" : "importance-sampling"},
          {"temperature", temperature},
          {"samples", samples},
          {"steps", steps}};
}

SelectionConfig SelectionConfig::from_json(const json& j) {
  SelectionConfig c;
  try {
    const std::string mode = j.value("mode", std::string("importance-sampling"));
    if (mode == "argmax") c.mode = SelectionMode::Argmax;
    else if (mode == "importance-sampling") c.mode = SelectionMode::ImportanceSampling;
    else throw ConfigError("unknown selection mode '" + mode + "'");
    c.temperature = j.value("temperature", c.temperature);
    c.samples = j.value("samples", c.samples);
    c.steps = j.value("steps", c.steps);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("selection: ") + e.what());
  }
  c.validate();
  return c;
}

Vec selection_weights(std::span<const double> q, double temperature) {
  if (q.empty()) throw std::invalid_argument("selection_weights: no candidates");
  const double top = *std::max_element(q.begin(), q.end());
  Vec w(q.size());
  double total = 0.0;
  for (std::size_t k = 0; k < q.size(); ++k) {
    w[k] = std::exp(temperature * (q[k] - top));
    total += w[k];
  }
  for (double& x : w) x /= total;
  return w;
}

std::size_t argmax_index(std::span<const double> q) {
  if (q.empty()) throw std::invalid_argument("argmax_index: no candidates");
  return static_cast<std::size_t>(std::max_element(q.begin(), q.end()) - q.begin());
}

Vec combine(const Matrix& candidates, std::span<const double> weights) {
  if (static_cast<Eigen::Index>(weights.size()) != candidates.cols()) {
    throw std::invalid_argument("combine: one weight per candidate required");
  }
  Vec out(candidates.rows(), 0.0);
  for (Eigen::Index k = 0; k < candidates.cols(); ++k) {
    for (Eigen::Index r = 0; r < candidates.rows(); ++r) out[r] += weights[k] * candidates(r, k);
  }
  return out;
}

Vec select_from(const Matrix& candidates, std::span<const double> q, const SelectionConfig& config) {
  if (static_cast<Eigen::Index>(q.size()) != candidates.cols()) {
    throw std::invalid_argument("select_from: one value per candidate required");
  }
  if (config.mode == SelectionMode::Argmax || candidates.cols() == 1) {
    const auto best = static_cast<Eigen::Index>(argmax_index(q));
    return Vec(candidates.col(best).data(), candidates.col(best).data() + candidates.rows());
  }
  return combine(candidates, selection_weights(q, config.temperature));
}

}  // namespace socd::core
