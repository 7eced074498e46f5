#pragma once

#include <memory>

#include "socd/diffusion/score_model.hpp"
#include "socd/policy/policy.hpp"

namespace socd::policy {

/// Jobs per node, M^(k) = sum of queue counts charged to node k.
Vec jobs_per_node(const env::ObsLayout& layout, std::span<const double> obs);

/// min(E_0^(k) / M^(k), v_max) on every occupied cell of node k; zero elsewhere.
/// `budgets` has one entry per node. Sets *cap_bound when v_max is the binding term.
Vec uniform_action(const env::ObsLayout& layout, std::span<const double> obs,
                   std::span<const double> budgets, bool* cap_bound = nullptr);

/// Greedy earliest-deadline-first fill. Cells are visited by ascending tau, then
/// descending weight, ascending user, ascending hop. Each job gets e_max until the
/// node budget runs out; the cell that exhausts it shares the remainder equally.
Vec edf_action(const env::ObsLayout& layout, std::span<const double> obs,
               std::span<const double> budgets, double e_max);

struct NoisyEdfParams {
  Vec budgets;             // per node
  double noise = 0.3;      // per-cell perturbation half-width, in units of v_max
  double epsilon = 0.1;    // probability of a uniformly random action
  nlohmann::json to_json() const;
  static NoisyEdfParams from_json(const nlohmann::json& j);
};

/// EDF with U(-noise, noise) * v_max added per cell and clipped; with probability
/// epsilon the action is instead U(0, v_max) per cell.
Vec noisy_edf_action(const env::ObsLayout& layout, std::span<const double> obs,
                     const NoisyEdfParams& params, Rng& rng);

class ZeroPolicy final : public Policy {
 public:
  explicit ZeroPolicy(const env::ObsLayout& layout) : dim_(layout.action_dim()) {}
  std::string id() const override { return "zero"; }
  Vec act(std::span<const double>, Rng&) override { return Vec(dim_, 0.0); }

 private:
  std::size_t dim_;
};

class UniformPolicy final : public Policy {
 public:
  UniformPolicy(env::ObsLayout layout, Vec budgets);
  std::string id() const override { return "uniform"; }
  Vec act(std::span<const double> obs, Rng& rng) override;
  nlohmann::json diagnostics() const override;

 private:
  env::ObsLayout layout_;
  Vec budgets_;
  long slots_ = 0;
  long cap_bound_ = 0;
};

class EdfPolicy final : public Policy {
 public:
  EdfPolicy(env::ObsLayout layout, Vec budgets, double e_max);
  std::string id() const override { return "edf"; }
  Vec act(std::span<const double> obs, Rng& rng) override;

 private:
  env::ObsLayout layout_;
  Vec budgets_;
  double e_max_;
};

class NoisyEdfPolicy final : public Policy {
 public:
  NoisyEdfPolicy(env::ObsLayout layout, NoisyEdfParams params);
  std::string id() const override { return "noisy-edf"; }
  Vec act(std::span<const double> obs, Rng& rng) override;

 private:
  env::ObsLayout layout_;
  NoisyEdfParams params_;
};

/// Diffusion behaviour cloning readout: one sample per state, or the mean of
/// `samples` draws when samples > 1.
class BcPolicy final : public Policy {
 public:
  BcPolicy(std::shared_ptr<const diffusion::ScoreModel> model, int steps, int samples = 1);
  std::string id() const override { return "bc"; }
  Vec act(std::span<const double> obs, Rng& rng) override;

 private:
  std::shared_ptr<const diffusion::ScoreModel> model_;
  int steps_;
  int samples_;
};

}  // namespace socd::policy
