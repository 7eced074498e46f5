#include "socd/env/single_hop.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace socd::env {

double success_prob(double v, double c, double l) {
  if (!(c > 0.0)) throw std::domain_error("success_prob: channel value must be positive");
  if (!(l > 0.0)) throw std::domain_error("success_prob: distance must be positive");
  return 2.0 / (1.0 + std::exp(-2.0 * v / (l * l * l * c))) - 1.0;
}

namespace detail {

int draw_poisson(Rng& rng, double mean) {
  if (mean <= 0.0) return 0;
  return std::poisson_distribution<int>(mean)(rng);
}

double draw_uniform(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

int draw_categorical(Rng& rng, std::span<const double> probs) {
  const double u = draw_uniform(rng);
  double acc = 0.0;
  for (std::size_t k = 0; k < probs.size(); ++k) {
    acc += probs[k];
    if (u < acc) return static_cast<int>(k);
  }
  return static_cast<int>(probs.size()) - 1;
}

int clip_action(std::span<const double> in, std::span<double> out, double v_max) {
  int clipped = 0;
  for (std::size_t k = 0; k < in.size(); ++k) {
    double v = in[k];
    if (std::isnan(v)) {
      v = 0.0;
      ++clipped;
    } else if (v < 0.0) {
      v = 0.0;
      ++clipped;
    } else if (v > v_max) {
      v = v_max;
      ++clipped;
    }
    out[k] = v;
  }
  return clipped;
}

}  // namespace detail

int QueueState::total(int user) const {
  const auto& q = counts.at(user);
  return std::accumulate(q.begin(), q.end(), 0);
}

int QueueState::total() const {
  int s = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) s += total(static_cast<int>(i));
  return s;
}

SingleHopEnv::SingleHopEnv(EnvConfig config) : config_(std::move(config)) {
  config_.validate();
  layout_ = ObsLayout::single_hop(config_);
}

void SingleHopEnv::draw_arrivals() {
  for (int i = 0; i < config_.num_users; ++i) {
    arrivals_[i] = detail::draw_poisson(rng_, config_.arrival_rates[i]);
    queues_.counts[i][config_.deadlines[i]] += arrivals_[i];
  }
}

Vec SingleHopEnv::reset(std::uint64_t seed) {
  rng_.seed(seed);
  const int n = config_.num_users;
  queues_.counts.assign(n, {});
  for (int i = 0; i < n; ++i) queues_.counts[i].assign(config_.deadlines[i] + 1, 0);
  arrivals_.assign(n, 0);
  channel_idx_.assign(n, 0);
  const int num_states = static_cast<int>(config_.channel_states.size());
  for (int i = 0; i < n; ++i) {
    channel_idx_[i] = std::uniform_int_distribution<int>(0, num_states - 1)(rng_);
  }
  draw_arrivals();
  slot_ = 0;
  clip_count_ = 0;
  initialized_ = true;
  return observe();
}

Vec SingleHopEnv::observe() const {
  if (!initialized_) throw std::logic_error("observe: environment not reset");
  Vec obs;
  obs.reserve(layout_.obs_dim());
  for (int a : arrivals_) obs.push_back(a);
  for (const auto& q : queues_.counts) {
    for (int c : q) obs.push_back(c);
  }
  if (!config_.partial_obs) {
    for (int i = 0; i < config_.num_users; ++i) obs.push_back(channel(i));
  }
  return obs;
}

StepOutcome SingleHopEnv::step(std::span<const double> action) {
  if (!initialized_) throw std::logic_error("step: environment not reset");
  if (done()) throw std::logic_error("step: episode already finished");
  if (action.size() != layout_.action_dim()) {
    throw std::invalid_argument("step: action has " + std::to_string(action.size()) +
                                " entries, layout expects " + std::to_string(layout_.action_dim()));
  }
  const int n = config_.num_users;
  Vec alloc(action.size());
  StepOutcome out;
  out.clipped = detail::clip_action(action, alloc, config_.v_max);
  clip_count_ += out.clipped;

  out.served.assign(n, 0);
  out.expired.assign(n, 0);
  std::size_t cell = 0;
  for (int i = 0; i < n; ++i) {
    auto& q = queues_.counts[i];
    const double l = config_.distances[i];
    const double c = channel(i);
    for (int tau = 0; tau <= config_.deadlines[i]; ++tau, ++cell) {
      const double v = alloc[cell];
      out.resource_E += v * q[tau];  // charged on allocation, success or not
      const double p = success_prob(v, c, l);
      int ok = 0;
      for (int job = 0; job < q[tau]; ++job) {
        if (detail::draw_uniform(rng_) < p) ++ok;
      }
      q[tau] -= ok;
      out.served[i] += ok;
    }
    out.throughput_D += config_.weights[i] * out.served[i];
    // Age survivors; lifetime-0 leftovers expire.
    out.expired[i] = q[0];
    for (int tau = 0; tau < config_.deadlines[i]; ++tau) q[tau] = q[tau + 1];
    q[config_.deadlines[i]] = 0;
  }
  out.node_resource = {out.resource_E};

  for (int i = 0; i < n; ++i) {
    channel_idx_[i] = detail::draw_categorical(rng_, config_.channel_transition[i][channel_idx_[i]]);
  }
  draw_arrivals();
  ++slot_;
  out.next_obs = observe();
  return out;
}

}  // namespace socd::env
