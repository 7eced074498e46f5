#pragma once

#include <functional>
#include <span>
#include <utility>
#include <vector>

#include <json.hpp>

#include "socd/data/dataset.hpp"
#include "socd/nn/dense_net.hpp"

namespace socd::core {

struct LagrangeConfig {
  double step = 0.05;        // alpha_lambda
  int outer_iters = 8;       // K_outer
  double lambda0 = 1.0;
  int consumption_trajectories = 20;  // n in the offline estimator
  bool per_node = false;     // one multiplier per node (multi-hop) instead of a shared scalar

  void validate() const;
  nlohmann::json to_json() const;
  static LagrangeConfig from_json(const nlohmann::json& j);
};

/// Dual iterate with its budget and the appended (lambda, E_hat) history.
struct LagrangeState {
  Vec lambda;
  double step = 0.05;
  Vec budget;
  std::vector<std::pair<Vec, Vec>> history;
};

/// lambda' = max(0, lambda - step (E_0 - E_hat)) componentwise; appends
/// (lambda, E_hat) to the history. E_hat must be nonnegative and match lambda in size.
LagrangeState lagrange_update(LagrangeState state, std::span<const double> e_hat);

/// Returns actions (one column per state) for the states of trajectory `ep`.
using TrajectoryActionFn =
    std::function<nn::Matrix(const nn::Matrix& states, std::size_t ep, Rng& rng)>;

/// Offline consumption estimate: samples n trajectories, asks the policy for an
/// action in every logged state and averages v^T Q over all n T slots, using the
/// buffer block of each logged state. Returns one entry per node when per_node,
/// else the total. Throws std::invalid_argument for n = 0 or n > J.
Vec estimate_consumption(const data::Dataset& data, const TrajectoryActionFn& policy, int n,
                         Rng& rng, bool per_node = false);

/// Logged states of trajectory ep as columns.
nn::Matrix trajectory_states(const data::Dataset& data, std::size_t ep);
nn::Matrix trajectory_actions(const data::Dataset& data, std::size_t ep);

}  // namespace socd::core
