#pragma once

#include <memory>
#include <span>
#include <string>

#include <json.hpp>

#include "socd/common.hpp"
#include "socd/env/layout.hpp"

namespace socd::policy {

/// Maps an observation to a raw action in [0, v_max]^cells.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::string id() const = 0;
  virtual Vec act(std::span<const double> obs, Rng& rng) = 0;
  /// Policy-specific counters accumulated since construction.
  virtual nlohmann::json diagnostics() const { return nlohmann::json::object(); }
};

using PolicyPtr = std::unique_ptr<Policy>;

}  // namespace socd::policy
