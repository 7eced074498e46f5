#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "socd/common.hpp"

namespace socd::env {

using Matrix2 = std::vector<std::vector<double>>;

/// Single-hop environment parameters. Arrays are indexed by user.
struct EnvConfig {
  int num_users = 0;
  std::vector<int> deadlines;        // tau_i >= 1, slots
  Vec weights;                       // omega_i > 0
  Vec arrival_rates;                 // Poisson mean jobs per slot
  Vec channel_states{0.5, 1.0, 2.0};
  std::vector<Matrix2> channel_transition;  // one row-stochastic matrix per user
  Vec distances;                     // l_i > 0
  double v_max = 2.0;
  double budget_E0 = 10.0;
  bool partial_obs = false;
  int episode_len = 100;
  std::uint64_t seed = 0;

  int max_deadline() const;
  /// Throws ConfigError describing the first violated invariant.
  void validate() const;
};

/// Multi-hop extension. Routes are per-flow node sequences (0-based internally).
struct MultiHopConfig {
  EnvConfig base;
  int num_nodes = 1;
  std::vector<std::vector<int>> routes;
  Vec node_budgets;                          // E_0^(k)
  std::vector<Matrix2> node_channel_transition;  // one matrix per node

  int max_path_len() const;
  int path_len(int flow) const { return static_cast<int>(routes.at(flow).size()); }
  /// h^(i) as a J x K 0/1 matrix; rows beyond J_i are zero.
  std::vector<std::vector<int>> incidence(int flow) const;
  void validate() const;
};

/// Symmetric sticky chain: stay with probability `stay`, move uniformly otherwise.
Matrix2 sticky_transition(std::size_t num_states, double stay = 0.8);

/// Table-driven presets. Names: poisson-1hop, poisson-2hop, poisson-3hop, poisson-100user.
EnvConfig preset_single(const std::string& name);
MultiHopConfig preset_multihop(const std::string& name);
bool is_multihop_preset(const std::string& name);

/// Either a single-hop or a multi-hop environment description.
struct AnyEnvConfig {
  EnvConfig single;
  std::optional<MultiHopConfig> multihop;

  const EnvConfig& base() const { return multihop ? multihop->base : single; }
  EnvConfig& base() { return multihop ? multihop->base : single; }
  bool is_multihop() const { return multihop.has_value(); }
  void validate() const;
  /// Total per-slot budget: E_0 for single-hop, sum of node budgets for multi-hop.
  double total_budget() const;
  /// Per-node budgets (size 1 for single-hop).
  Vec node_budgets() const;
  /// Sets the budget; for multi-hop scales node budgets proportionally to reach `total`.
  void set_total_budget(double total);
};

nlohmann::json to_json(const EnvConfig& c);
nlohmann::json to_json(const AnyEnvConfig& c);
EnvConfig env_from_json(const nlohmann::json& j);
/// Reads {"env": {...}, "multihop": {...}?}. Keys override an optional "preset".
AnyEnvConfig any_env_from_json(const nlohmann::json& root);
AnyEnvConfig load_env_config(const std::string& path);

/// FNV-1a over the canonical JSON dump.
std::string config_hash(const AnyEnvConfig& c);

}  // namespace socd::env
