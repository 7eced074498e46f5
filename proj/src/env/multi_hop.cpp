#include "socd/env/multi_hop.hpp"

#include <numeric>
#include <stdexcept>

namespace socd::env {

int HopQueueState::total(int flow) const {
  int s = 0;
  for (const auto& hop : counts.at(flow)) s += std::accumulate(hop.begin(), hop.end(), 0);
  return s;
}

MultiHopEnv::MultiHopEnv(MultiHopConfig config) : config_(std::move(config)) {
  config_.validate();
  layout_ = ObsLayout::multi_hop(config_);
}

void MultiHopEnv::draw_arrivals() {
  const auto& base = config_.base;
  for (int i = 0; i < base.num_users; ++i) {
    arrivals_[i] = detail::draw_poisson(rng_, base.arrival_rates[i]);
    queues_.counts[i][0][base.deadlines[i]] += arrivals_[i];
  }
}

Vec MultiHopEnv::reset(std::uint64_t seed) {
  rng_.seed(seed);
  const auto& base = config_.base;
  const int n = base.num_users;
  queues_.counts.assign(n, {});
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < config_.path_len(i); ++j) {
      queues_.counts[i].emplace_back(base.deadlines[i] - j + 1, 0);
    }
  }
  arrivals_.assign(n, 0);
  channel_idx_.assign(config_.num_nodes, 0);
  const int num_states = static_cast<int>(base.channel_states.size());
  for (int k = 0; k < config_.num_nodes; ++k) {
    channel_idx_[k] = std::uniform_int_distribution<int>(0, num_states - 1)(rng_);
  }
  draw_arrivals();
  slot_ = 0;
  clip_count_ = 0;
  initialized_ = true;
  return observe();
}

Vec MultiHopEnv::observe() const {
  if (!initialized_) throw std::logic_error("observe: environment not reset");
  Vec obs;
  obs.reserve(layout_.obs_dim());
  for (int a : arrivals_) obs.push_back(a);
  for (const auto& cell : layout_.cells) {
    obs.push_back(queues_.counts[cell.user][cell.hop][cell.tau]);
  }
  if (!config_.base.partial_obs) {
    for (int k = 0; k < config_.num_nodes; ++k) obs.push_back(channel(k));
  }
  return obs;
}

StepOutcome MultiHopEnv::step(std::span<const double> action) {
  if (!initialized_) throw std::logic_error("step: environment not reset");
  if (done()) throw std::logic_error("step: episode already finished");
  if (action.size() != layout_.action_dim()) {
    throw std::invalid_argument("mh_step: action has " + std::to_string(action.size()) +
                                " entries, layout expects " + std::to_string(layout_.action_dim()));
  }
  const auto& base = config_.base;
  const int n = base.num_users;
  Vec alloc(action.size());
  StepOutcome out;
  out.clipped = detail::clip_action(action, alloc, base.v_max);
  clip_count_ += out.clipped;
  out.served.assign(n, 0);
  out.expired.assign(n, 0);
  out.node_resource.assign(config_.num_nodes, 0.0);

  // Service draws for every cell before any job moves.
  std::vector<int> ok(layout_.cells.size(), 0);
  for (std::size_t c = 0; c < layout_.cells.size(); ++c) {
    const auto& cell = layout_.cells[c];
    const int jobs = queues_.counts[cell.user][cell.hop][cell.tau];
    const double v = alloc[c];
    out.resource_E += v * jobs;
    out.node_resource[cell.node] += v * jobs;
    const double p = success_prob(v, channel(cell.node), base.distances[cell.user]);
    for (int job = 0; job < jobs; ++job) {
      if (detail::draw_uniform(rng_) < p) ++ok[c];
    }
  }

  HopQueueState next = queues_;
  for (auto& flow : next.counts) {
    for (auto& hop : flow) std::fill(hop.begin(), hop.end(), 0);
  }
  for (std::size_t c = 0; c < layout_.cells.size(); ++c) {
    const auto& cell = layout_.cells[c];
    const int jobs = queues_.counts[cell.user][cell.hop][cell.tau];
    const int fail = jobs - ok[c];
    const bool last_hop = cell.hop + 1 == config_.path_len(cell.user);
    if (cell.tau > 0) {
      next.counts[cell.user][cell.hop][cell.tau - 1] += fail;
    } else {
      out.expired[cell.user] += fail;
    }
    if (last_hop) {
      out.served[cell.user] += ok[c];
    } else if (cell.tau > 0) {
      next.counts[cell.user][cell.hop + 1][cell.tau - 1] += ok[c];
    } else {
      out.expired[cell.user] += ok[c];  // forwarded with no time left
    }
  }
  queues_ = std::move(next);
  for (int i = 0; i < n; ++i) out.throughput_D += base.weights[i] * out.served[i];

  for (int k = 0; k < config_.num_nodes; ++k) {
    channel_idx_[k] =
        detail::draw_categorical(rng_, config_.node_channel_transition[k][channel_idx_[k]]);
  }
  draw_arrivals();
  ++slot_;
  out.next_obs = observe();
  return out;
}

}  // namespace socd::env

#include "socd/env/single_hop.hpp"

namespace socd::env {

std::unique_ptr<Environment> make_environment(const AnyEnvConfig& config) {
  if (config.multihop) return std::make_unique<MultiHopEnv>(*config.multihop);
  return std::make_unique<SingleHopEnv>(config.single);
}

}  // namespace socd::env
