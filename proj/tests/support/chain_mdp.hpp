// Deterministic 3-state chain used to check the critic against dynamic programming.
#pragma once

#include "oracles.hpp"
#include "socd/critic/critic.hpp"

namespace oracle {

struct ChainFit {
  double max_error = 0.0;
  Vec q;
  Vec exact;
};

/// States are one-hot, the single logged action differs per state, rewards are fixed.
/// Fits a fresh critic on the three (s, a, G) triples for cfg.steps updates.
inline ChainFit fit_chain(const socd::critic::CriticConfig& cfg, std::uint64_t seed) {
  using socd::critic::CriticBatch;
  const Vec rewards{1.0, -0.5, 2.0};
  const double v_max = 2.0;
  Matrix states = Matrix::Identity(3, 3);
  Matrix actions(1, 3);
  actions << 0.5, 1.5, 1.0;
  ChainFit out;
  out.exact = chain_returns(rewards, cfg.gamma);
  Rng rng(seed);
  socd::critic::CriticPair pair(3, 1, v_max, cfg, rng);
  const Vec g = socd::critic::mc_returns(rewards, cfg.gamma);
  double mean = (g[0] + g[1] + g[2]) / 3.0, var = 0.0;
  for (double x : g) var += (x - mean) * (x - mean) / 3.0;
  pair.set_output_scale(mean, std::sqrt(var));
  const socd::critic::CriticSampler sampler = [&](Rng&) { return CriticBatch{states, actions, g}; };
  socd::critic::fit_critic(pair, sampler, rng);
  out.q = pair.q_values(states, actions);
  for (int s = 0; s < 3; ++s) out.max_error = std::max(out.max_error, std::abs(out.q[s] - out.exact[s]));
  return out;
}

}  // namespace oracle
