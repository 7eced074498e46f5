#include "socd/core/socd_policy.hpp"

#include <algorithm>
#include <stdexcept>

namespace socd::core {

std::string to_string(StateMode m) { return m == StateMode::Joint ? "joint" : "decomposed"; }

StateMode state_mode_from_string(const std::string& s) {
  if (s == "joint") return StateMode::Joint;
  if (s == "decomposed") return StateMode::Decomposed;
  throw ConfigError("unknown state mode '" + s + "'");
}

Vec select_action(std::span<const double> state, const diffusion::ScoreModel& bc,
                  const critic::CriticPair& critic, const SelectionConfig& config, Rng& rng) {
  const nn::Matrix candidates = diffusion::sample(bc, state, config.samples, config.steps, rng);
  const nn::Matrix s = Eigen::Map<const nn::Matrix>(state.data(), static_cast<Eigen::Index>(state.size()), 1)
                           .replicate(1, candidates.cols());
  const Vec q = critic.q_values(s, candidates);
  return select_from(candidates, q, config);
}

nn::Matrix model_states(const env::ObsLayout& layout, StateMode mode, const nn::Matrix& states) {
  if (mode == StateMode::Joint) return states;
  const UserView view = UserView::from(layout);
  const Eigen::Index n = layout.num_users;
  nn::Matrix out(static_cast<Eigen::Index>(view.state_dim()), states.cols() * n);
  for (Eigen::Index b = 0; b < states.cols(); ++b) {
    std::span<const double> obs(states.col(b).data(), states.rows());
    for (Eigen::Index i = 0; i < n; ++i) {
      const Vec sub = decompose_state(layout, obs, static_cast<int>(i));
      out.col(b * n + i) = Eigen::Map<const nn::Vector>(sub.data(), static_cast<Eigen::Index>(sub.size()));
    }
  }
  return out;
}

nn::Matrix select_actions(const env::ObsLayout& layout, const SocdModels& models,
                          const nn::Matrix& states, const SelectionConfig& config, Rng& rng,
                          Eigen::Index max_columns) {
  if (!models.bc || !models.critic) throw std::invalid_argument("select_actions: models are not set");
  config.validate();
  const nn::Matrix ms = model_states(layout, models.mode, states);
  const Eigen::Index K = config.samples;
  const Eigen::Index chunk = std::max<Eigen::Index>(1, max_columns / K);
  nn::Matrix chosen(models.bc->action_dim(), ms.cols());
  for (Eigen::Index start = 0; start < ms.cols(); start += chunk) {
    const Eigen::Index len = std::min(chunk, ms.cols() - start);
    const nn::Matrix block = ms.middleCols(start, len);
    const nn::Matrix candidates = models.bc->denormalize_actions(
        diffusion::sample_normalized_batch(*models.bc, block, config.samples, config.steps, rng));
    nn::Matrix rep(block.rows(), len * K);
    for (Eigen::Index b = 0; b < len; ++b) rep.middleCols(b * K, K) = block.col(b).replicate(1, K);
    const Vec q = models.critic->q_values(rep, candidates);
    for (Eigen::Index b = 0; b < len; ++b) {
      const Vec a = select_from(candidates.middleCols(b * K, K),
                                std::span<const double>(q.data() + b * K, K), config);
      chosen.col(start + b) = Eigen::Map<const nn::Vector>(a.data(), static_cast<Eigen::Index>(a.size()));
    }
  }
  if (models.mode == StateMode::Joint) return chosen;
  const Eigen::Index n = layout.num_users;
  nn::Matrix out = nn::Matrix::Zero(static_cast<Eigen::Index>(layout.action_dim()), states.cols());
  for (Eigen::Index b = 0; b < states.cols(); ++b) {
    std::span<double> global(out.col(b).data(), out.rows());
    for (Eigen::Index i = 0; i < n; ++i) {
      scatter_user_action(layout, static_cast<int>(i),
                          std::span<const double>(chosen.col(b * n + i).data(), chosen.rows()), global);
    }
  }
  return out;
}

SocdPolicy::SocdPolicy(env::ObsLayout layout, SocdModels models, SelectionConfig config)
    : layout_(std::move(layout)), models_(std::move(models)), config_(config) {
  config_.validate();
}

Vec SocdPolicy::act(std::span<const double> obs, Rng& rng) {
  if (obs.size() != layout_.obs_dim()) throw std::invalid_argument("SocdPolicy: observation size mismatch");
  const nn::Matrix s = Eigen::Map<const nn::Matrix>(obs.data(), static_cast<Eigen::Index>(obs.size()), 1);
  const nn::Matrix a = select_actions(layout_, models_, s, config_, rng);
  return Vec(a.data(), a.data() + a.size());
}

}  // namespace socd::core
