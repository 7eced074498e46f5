#pragma once

#include "socd/env/config.hpp"
#include "socd/env/environment.hpp"

namespace socd::env {

/// counts[i][tau]: user-i jobs with tau slots to expiry; counts[i] has tau_i+1 entries.
struct QueueState {
  std::vector<std::vector<int>> counts;

  int total(int user) const;
  int total() const;
};

class SingleHopEnv final : public Environment {
 public:
  explicit SingleHopEnv(EnvConfig config);

  const ObsLayout& layout() const override { return layout_; }
  Vec reset(std::uint64_t seed) override;
  StepOutcome step(std::span<const double> action) override;
  Vec observe() const override;
  int slot() const override { return slot_; }
  int episode_len() const override { return config_.episode_len; }
  int clip_count() const override { return clip_count_; }

  const EnvConfig& config() const { return config_; }
  const QueueState& queues() const { return queues_; }
  const std::vector<int>& arrivals() const { return arrivals_; }
  /// Current channel value per user.
  double channel(int user) const { return config_.channel_states[channel_idx_[user]]; }

 private:
  void draw_arrivals();

  EnvConfig config_;
  ObsLayout layout_;
  Rng rng_;
  QueueState queues_;
  std::vector<int> arrivals_;
  std::vector<int> channel_idx_;
  int slot_ = 0;
  int clip_count_ = 0;
  bool initialized_ = false;
};

}  // namespace socd::env
