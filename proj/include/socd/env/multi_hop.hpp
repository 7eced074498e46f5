#pragma once

#include "socd/env/config.hpp"
#include "socd/env/environment.hpp"

namespace socd::env {

/// counts[i][j][tau] for flow i at 0-based hop j; hop j keeps lifetimes
/// 0..tau_i-j. Hops beyond the flow's path length have no entries.
struct HopQueueState {
  std::vector<std::vector<std::vector<int>>> counts;

  int total(int flow) const;
};

/// Store-and-forward multi-hop simulator. A job served at hop j moves to hop j+1
/// with one slot less to expiry and becomes servable in the next slot; a job
/// served at its final hop is delivered.
class MultiHopEnv final : public Environment {
 public:
  explicit MultiHopEnv(MultiHopConfig config);

  const ObsLayout& layout() const override { return layout_; }
  Vec reset(std::uint64_t seed) override;
  StepOutcome step(std::span<const double> action) override;
  Vec observe() const override;
  int slot() const override { return slot_; }
  int episode_len() const override { return config_.base.episode_len; }
  int clip_count() const override { return clip_count_; }

  const MultiHopConfig& config() const { return config_; }
  const HopQueueState& queues() const { return queues_; }
  double channel(int node) const { return config_.base.channel_states[channel_idx_[node]]; }

 private:
  void draw_arrivals();

  MultiHopConfig config_;
  ObsLayout layout_;
  Rng rng_;
  HopQueueState queues_;
  std::vector<int> arrivals_;
  std::vector<int> channel_idx_;
  int slot_ = 0;
  int clip_count_ = 0;
  bool initialized_ = false;
};

}  // namespace socd::env
