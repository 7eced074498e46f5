#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "socd/common.hpp"
#include "socd/env/layout.hpp"

namespace socd::env {

/// Probability that one job is served with resource v on channel c at distance l.
/// Equals tanh(v / (l^3 c)). Throws std::domain_error for c <= 0 or l <= 0.
double success_prob(double v, double c, double l);

struct StepOutcome {
  std::vector<int> served;   // u_i(t), jobs delivered per user / flow
  std::vector<int> expired;  // jobs discarded at lifetime 0 per user / flow
  double throughput_D = 0.0;
  double resource_E = 0.0;
  Vec node_resource;         // E^(k)(t); one entry for single-hop
  Vec next_obs;
  int clipped = 0;           // action entries clipped into [0, v_max] this slot
};

/// Common surface of the single-hop and multi-hop simulators.
///
/// Slot order: arrivals -> observe -> act -> Bernoulli service -> charge E(t)
/// -> age/discard -> channel transition -> next arrivals.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual const ObsLayout& layout() const = 0;
  virtual Vec reset(std::uint64_t seed) = 0;
  virtual StepOutcome step(std::span<const double> action) = 0;
  virtual Vec observe() const = 0;

  virtual int slot() const = 0;
  virtual int episode_len() const = 0;
  bool done() const { return slot() >= episode_len(); }
  /// Clipped action entries since the last reset.
  virtual int clip_count() const = 0;
};

namespace detail {
int draw_poisson(Rng& rng, double mean);
int draw_categorical(Rng& rng, std::span<const double> probs);
double draw_uniform(Rng& rng);
/// Clips into [0, v_max]; NaN becomes 0. Returns the number of clipped entries.
int clip_action(std::span<const double> in, std::span<double> out, double v_max);
}  // namespace detail

}  // namespace socd::env

#include <memory>

namespace socd::env {

/// Builds the single-hop or multi-hop simulator described by `config`.
std::unique_ptr<Environment> make_environment(const AnyEnvConfig& config);

}  // namespace socd::env
