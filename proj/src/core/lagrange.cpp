#include "socd/core/lagrange.hpp"

#include <algorithm>
#include <stdexcept>

namespace socd::core {

using nlohmann::json;

void LagrangeConfig::validate() const {
  if (!(step > 0.0)) throw ConfigError("lagrange.step must be > 0");
  if (outer_iters < 1) throw ConfigError("lagrange.outer_iters must be >= 1");
  if (!(lambda0 >= 0.0)) throw ConfigError("lagrange.lambda0 must be >= 0");
  if (consumption_trajectories < 1) throw ConfigError("lagrange.consumption_trajectories must be >= 1");
}

json LagrangeConfig::to_json() const {
  return {{"step", step},
          {"outer_iters", outer_iters},
          {"lambda0", lambda0},
          {"consumption_trajectories", consumption_trajectories},
          {"per_node", per_node}};
}

LagrangeConfig LagrangeConfig::from_json(const json& j) {
  LagrangeConfig c;
  try {
    c.step = j.value("step", c.step);
    c.outer_iters = j.value("outer_iters", c.outer_iters);
    c.lambda0 = j.value("lambda0", c.lambda0);
    c.consumption_trajectories = j.value("consumption_trajectories", c.consumption_trajectories);
    c.per_node = j.value("per_node", c.per_node);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("lagrange: ") + e.what());
  }
  c.validate();
  return c;
}

LagrangeState lagrange_update(LagrangeState state, std::span<const double> e_hat) {
  if (e_hat.size() != state.lambda.size() || state.budget.size() != state.lambda.size()) {
    throw std::invalid_argument("lagrange_update: lambda, budget and E_hat sizes differ");
  }
  Vec next(state.lambda.size());
  for (std::size_t k = 0; k < next.size(); ++k) {
    if (!(e_hat[k] >= 0.0)) throw std::invalid_argument("lagrange_update: E_hat must be nonnegative");
    next[k] = std::max(0.0, state.lambda[k] - state.step * (state.budget[k] - e_hat[k]));
  }
  state.history.emplace_back(state.lambda, Vec(e_hat.begin(), e_hat.end()));
  state.lambda = std::move(next);
  return state;
}

nn::Matrix trajectory_states(const data::Dataset& data, std::size_t ep) {
  const auto& steps = data.trajectories.at(ep).steps;
  nn::Matrix s(static_cast<Eigen::Index>(data.layout.obs_dim()), static_cast<Eigen::Index>(steps.size()));
  for (std::size_t t = 0; t < steps.size(); ++t) {
    for (std::size_t r = 0; r < steps[t].state.size(); ++r) s(r, t) = steps[t].state[r];
  }
  return s;
}

nn::Matrix trajectory_actions(const data::Dataset& data, std::size_t ep) {
  const auto& steps = data.trajectories.at(ep).steps;
  nn::Matrix a(static_cast<Eigen::Index>(data.layout.action_dim()), static_cast<Eigen::Index>(steps.size()));
  for (std::size_t t = 0; t < steps.size(); ++t) {
    for (std::size_t r = 0; r < steps[t].action.size(); ++r) a(r, t) = steps[t].action[r];
  }
  return a;
}

Vec estimate_consumption(const data::Dataset& data, const TrajectoryActionFn& policy, int n,
                         Rng& rng, bool per_node) {
  if (n <= 0) throw std::invalid_argument("estimate_consumption: n must be >= 1");
  const auto picks = data::sample_trajectories(data, static_cast<std::size_t>(n), rng);
  const auto& layout = data.layout;
  Vec total(per_node ? layout.num_nodes : 1, 0.0);
  std::size_t count = 0;
  for (std::size_t ep : picks) {
    const nn::Matrix states = trajectory_states(data, ep);
    const nn::Matrix actions = policy(states, ep, rng);
    if (actions.cols() != states.cols() || actions.rows() != static_cast<Eigen::Index>(layout.action_dim())) {
      throw std::invalid_argument("estimate_consumption: policy returned the wrong shape");
    }
    for (Eigen::Index t = 0; t < states.cols(); ++t) {
      std::span<const double> s(states.col(t).data(), states.rows());
      std::span<const double> a(actions.col(t).data(), actions.rows());
      if (per_node) {
        const Vec e = layout.node_consumption(s, a);
        for (std::size_t k = 0; k < e.size(); ++k) total[k] += e[k];
      } else {
        total[0] += layout.consumption(s, a);
      }
      ++count;
    }
  }
  if (count == 0) throw std::invalid_argument("estimate_consumption: sampled trajectories are empty");
  for (double& x : total) x /= static_cast<double>(count);
  return total;
}

}  // namespace socd::core
