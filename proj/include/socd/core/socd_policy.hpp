#pragma once

#include <memory>
#include <string>

#include "socd/core/decompose.hpp"
#include "socd/core/selection.hpp"
#include "socd/critic/critic.hpp"
#include "socd/diffusion/score_model.hpp"
#include "socd/policy/policy.hpp"

namespace socd::core {

/// Joint: one model over the whole state/action. Decomposed: one shared model over
/// per-user sub-states, applied to every user and reassembled.
enum class StateMode { Joint, Decomposed };
std::string to_string(StateMode m);
StateMode state_mode_from_string(const std::string& s);

struct SocdModels {
  StateMode mode = StateMode::Joint;
  std::shared_ptr<const diffusion::ScoreModel> bc;
  std::shared_ptr<const critic::CriticPair> critic;
};

/// Algorithm-1 readout for one model-space state: K diffusion candidates scored by
/// the twin-min critic and reduced by `config`.
Vec select_action(std::span<const double> state, const diffusion::ScoreModel& bc,
                  const critic::CriticPair& critic, const SelectionConfig& config, Rng& rng);

/// Batched readout for global states (one column each) in either mode. States are
/// processed in chunks so that at most `max_columns` candidates are live at once.
nn::Matrix select_actions(const env::ObsLayout& layout, const SocdModels& models,
                          const nn::Matrix& states, const SelectionConfig& config, Rng& rng,
                          Eigen::Index max_columns = 8192);

/// Model-space states (joint: the states; decomposed: N sub-states per state,
/// user-minor) for a batch of global states.
nn::Matrix model_states(const env::ObsLayout& layout, StateMode mode, const nn::Matrix& states);

class SocdPolicy final : public policy::Policy {
 public:
  SocdPolicy(env::ObsLayout layout, SocdModels models, SelectionConfig config);
  std::string id() const override { return "socd"; }
  Vec act(std::span<const double> obs, Rng& rng) override;

 private:
  env::ObsLayout layout_;
  SocdModels models_;
  SelectionConfig config_;
};

}  // namespace socd::core
