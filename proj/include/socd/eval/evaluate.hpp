#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "socd/env/config.hpp"
#include "socd/policy/policy.hpp"

namespace socd::eval {

struct EvalConfig {
  int rounds = 5;
  int slots = 200;
  static EvalConfig paper_scale() { return {20, 1000}; }
  void validate() const;
  nlohmann::json to_json() const;
  static EvalConfig from_json(const nlohmann::json& j);
};

struct RoundStats {
  std::uint64_t env_seed = 0;
  std::uint64_t policy_seed = 0;
  double throughput = 0.0;   // mean D(t) over the round
  double consumption = 0.0;  // mean E(t) over the round
  double max_slot_E = 0.0;
  int clipped = 0;
  int budget_violations = 0;  // slots with some node above its per-slot budget
};

struct EvalReport {
  std::string policy;
  int rounds = 0;
  int slots = 0;
  std::vector<RoundStats> per_round;
  MeanStd throughput;   // across rounds, population std
  MeanStd consumption;
  long clipped = 0;
  long budget_violations = 0;
  double max_slot_E = 0.0;
  Vec budgets;
  std::string config_hash;
  std::uint64_t seed = 0;
  nlohmann::json diagnostics;
  nlohmann::json to_json() const;
};

/// Runs `rounds` independent episodes of `slots` slots. Round r uses env seed
/// derive_seed(seed, "eval-env", r) and policy stream derive_seed(seed, "eval-policy", r).
/// Throws std::invalid_argument when the policy's action size does not fit the env.
EvalReport evaluate(policy::Policy& policy, const env::AnyEnvConfig& config, const EvalConfig& eval,
                    std::uint64_t seed);

}  // namespace socd::eval
