#pragma once

#include <functional>
#include <memory>
#include <optional>

#include <json.hpp>

#include "socd/core/lagrange.hpp"
#include "socd/core/socd_policy.hpp"
#include "socd/data/dataset.hpp"

namespace socd::core {

struct TrainConfig {
  StateMode mode = StateMode::Joint;
  diffusion::ScoreModelConfig score;
  diffusion::BcTrainConfig bc{.steps = 5000, .lr = 1e-3};  // desk: 20x fewer steps than published, larger rate
  int bc_batch = 256;
  critic::CriticConfig critic;
  SelectionConfig selection;
  LagrangeConfig lagrange;
  std::uint64_t seed = 0;

  /// Published network shapes, step counts and candidate count.
  static TrainConfig paper_scale();
  void validate() const;
  nlohmann::json to_json() const;
  /// Reads the "train" section; missing keys keep their defaults.
  static TrainConfig from_json(const nlohmann::json& j);
};

/// One outer iteration: lambda used for relabelling, the estimate it produced and
/// the updated multiplier.
struct IterationRecord {
  int iteration = 0;
  Vec lambda;
  Vec e_hat;
  Vec lambda_next;
  std::uint64_t bc_hash = 0;
  double critic_loss = 0.0;  // mean over the last 100 critic steps
};

struct TrainResult {
  SocdModels models;
  LagrangeState lagrange;
  std::vector<IterationRecord> history;
  std::vector<double> bc_losses;
};

/// Behaviour-cloning model fitted to the dataset's (state, action) pairs (or
/// per-user pairs in decomposed mode).
std::shared_ptr<diffusion::ScoreModel> train_behavior_model(const data::Dataset& data,
                                                            const TrainConfig& config, Rng& rng,
                                                            std::vector<double>* losses = nullptr);

/// Fresh critic pair fitted to Monte-Carlo returns of rewards relabelled with lambda.
std::shared_ptr<critic::CriticPair> fit_critic_for_lambda(const data::Dataset& data,
                                                          const TrainConfig& config,
                                                          std::span<const double> lambda, Rng& rng,
                                                          double* final_loss = nullptr);

/// Offline consumption of the guided policy on n logged trajectories.
Vec estimate_policy_consumption(const data::Dataset& data, const SocdModels& models,
                                const TrainConfig& config, Rng& rng);

using ProgressFn = std::function<void(const IterationRecord&)>;

/// Trains the BC model once (or reuses `bc`), then for each outer iteration
/// relabels with the current lambda, refits the critic, estimates E_hat and takes
/// a projected dual step. `budget` overrides the config's per-slot budget.
TrainResult train(const data::Dataset& data, const TrainConfig& config,
                  std::shared_ptr<const diffusion::ScoreModel> bc = nullptr,
                  std::optional<double> budget = std::nullopt, const ProgressFn& progress = {});

}  // namespace socd::core
