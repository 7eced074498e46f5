#include "socd/core/trainer.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace socd::core {

using nlohmann::json;
using nn::Matrix;

TrainConfig TrainConfig::paper_scale() {
  TrainConfig c;
  c.score = diffusion::ScoreModelConfig::paper_scale();
  c.bc.steps = 100000;
  c.bc.lr = 1e-4;
  c.bc_batch = 5000;
  c.critic = critic::CriticConfig::paper_scale();
  c.selection.samples = 1024;
  return c;
}

void TrainConfig::validate() const {
  if (bc.steps < 0) throw ConfigError("train.bc.steps must be >= 0");
  if (!(bc.lr > 0.0)) throw ConfigError("train.bc.lr must be > 0");
  if (bc_batch < 1) throw ConfigError("train.bc.batch must be >= 1");
  if (critic.steps < 0) throw ConfigError("train.critic.steps must be >= 0");
  if (!(critic.lr > 0.0)) throw ConfigError("train.critic.lr must be > 0");
  if (!(critic.gamma > 0.0 && critic.gamma <= 1.0)) throw ConfigError("train.critic.gamma must be in (0, 1]");
  if (!(critic.rho > 0.0 && critic.rho <= 1.0)) throw ConfigError("train.critic.rho must be in (0, 1]");
  if (critic.batch_trajectories < 1 || critic.samples_per_trajectory < 1) {
    throw ConfigError("train.critic batch sizes must be >= 1");
  }
  if (score.hidden.empty()) throw ConfigError("train.score.hidden must be non-empty");
  selection.validate();
  lagrange.validate();
  if (mode == StateMode::Decomposed && lagrange.per_node) {
    throw ConfigError("decomposed mode uses a single multiplier");
  }
}

json TrainConfig::to_json() const {
  return {{"mode", core::to_string(mode)},
          {"seed", seed},
          {"score",
           {{"hidden", score.hidden},
            {"state_embed", score.state_embed},
            {"time_embed", score.time_embed},
            {"fourier_scale", score.fourier_scale},
            {"omega_min", score.schedule.omega_min},
            {"omega_max", score.schedule.omega_max}}},
          {"bc", {{"steps", bc.steps}, {"lr", bc.lr}, {"batch", bc_batch}}},
          {"critic",
           {{"hidden", critic.hidden},
            {"gamma", critic.gamma},
            {"rho", critic.rho},
            {"lr", critic.lr},
            {"steps", critic.steps},
            {"batch_trajectories", critic.batch_trajectories},
            {"samples_per_trajectory", critic.samples_per_trajectory}}},
          {"selection", selection.to_json()},
          {"lagrange", lagrange.to_json()}};
}

TrainConfig TrainConfig::from_json(const json& j) {
  TrainConfig c = j.value("scale", std::string("desk")) == "paper" ? paper_scale() : TrainConfig{};
  try {
    if (j.contains("mode")) c.mode = state_mode_from_string(j.at("mode").get<std::string>());
    c.seed = j.value("seed", c.seed);
    if (j.contains("score")) {
      const json& s = j.at("score");
      c.score.hidden = s.value("hidden", c.score.hidden);
      c.score.state_embed = s.value("state_embed", c.score.state_embed);
      c.score.time_embed = s.value("time_embed", c.score.time_embed);
      c.score.fourier_scale = s.value("fourier_scale", c.score.fourier_scale);
      c.score.schedule.omega_min = s.value("omega_min", c.score.schedule.omega_min);
      c.score.schedule.omega_max = s.value("omega_max", c.score.schedule.omega_max);
    }
    if (j.contains("bc")) {
      const json& b = j.at("bc");
      c.bc.steps = b.value("steps", c.bc.steps);
      c.bc.lr = b.value("lr", c.bc.lr);
      c.bc_batch = b.value("batch", c.bc_batch);
    }
    if (j.contains("critic")) {
      const json& q = j.at("critic");
      c.critic.hidden = q.value("hidden", c.critic.hidden);
      c.critic.gamma = q.value("gamma", c.critic.gamma);
      c.critic.rho = q.value("rho", c.critic.rho);
      c.critic.lr = q.value("lr", c.critic.lr);
      c.critic.steps = q.value("steps", c.critic.steps);
      c.critic.batch_trajectories = q.value("batch_trajectories", c.critic.batch_trajectories);
      c.critic.samples_per_trajectory = q.value("samples_per_trajectory", c.critic.samples_per_trajectory);
    }
    if (j.contains("selection")) c.selection = SelectionConfig::from_json(j.at("selection"));
    if (j.contains("lagrange")) c.lagrange = LagrangeConfig::from_json(j.at("lagrange"));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("train config: ") + e.what());
  }
  c.validate();
  return c;
}

namespace {

// Model-space columns for the whole dataset. Joint: column ep*T + t.
// Decomposed: column (ep*T + t)*N + i.
struct ModelSpace {
  Matrix states;
  Matrix actions;
  std::size_t T = 0;
  std::size_t per_slot = 1;  // columns per logged slot
};

ModelSpace build_model_space(const data::Dataset& data, StateMode mode) {
  ModelSpace ms;
  const auto& layout = data.layout;
  ms.T = data.trajectories.empty() ? 0 : data.trajectories.front().steps.size();
  ms.per_slot = mode == StateMode::Joint ? 1 : static_cast<std::size_t>(layout.num_users);
  const Eigen::Index cols = static_cast<Eigen::Index>(data.num_transitions() * ms.per_slot);
  if (mode == StateMode::Joint) {
    ms.states.resize(layout.obs_dim(), cols);
    ms.actions.resize(layout.action_dim(), cols);
  } else {
    const UserView view = UserView::from(layout);
    ms.states.resize(view.state_dim(), cols);
    ms.actions.resize(view.action_dim(), cols);
  }
  Eigen::Index c = 0;
  for (const auto& traj : data.trajectories) {
    for (const auto& tr : traj.steps) {
      if (mode == StateMode::Joint) {
        ms.states.col(c) = Eigen::Map<const nn::Vector>(tr.state.data(), ms.states.rows());
        ms.actions.col(c) = Eigen::Map<const nn::Vector>(tr.action.data(), ms.actions.rows());
        ++c;
        continue;
      }
      for (int i = 0; i < layout.num_users; ++i, ++c) {
        const Vec s = decompose_state(layout, tr.state, i);
        const Vec a = user_action(layout, tr.action, i);
        ms.states.col(c) = Eigen::Map<const nn::Vector>(s.data(), ms.states.rows());
        ms.actions.col(c) = Eigen::Map<const nn::Vector>(a.data(), ms.actions.rows());
      }
    }
  }
  return ms;
}

// Discounted returns per model-space column under multiplier lambda.
Vec model_space_returns(const data::Dataset& data, StateMode mode, std::span<const double> lambda,
                        double gamma) {
  Vec out;
  out.reserve(data.num_transitions() * (mode == StateMode::Joint ? 1 : data.layout.num_users));
  if (mode == StateMode::Joint) {
    const data::RewardView view(data, Vec(lambda.begin(), lambda.end()));
    for (std::size_t ep = 0; ep < data.num_trajectories(); ++ep) {
      const Vec g = critic::mc_returns(view.episode_rewards(ep), gamma);
      out.insert(out.end(), g.begin(), g.end());
    }
    return out;
  }
  data::check_lambda(lambda);
  if (lambda.size() != 1) throw std::invalid_argument("decomposed mode needs a scalar lambda");
  const auto& layout = data.layout;
  const int n = layout.num_users;
  for (const auto& traj : data.trajectories) {
    const std::size_t T = traj.steps.size();
    std::vector<Vec> per_user(n, Vec(T));
    for (std::size_t t = 0; t < T; ++t) {
      const auto& tr = traj.steps[t];
      for (int i = 0; i < n; ++i) {
        per_user[i][t] = layout.weights[i] * tr.served[i] -
                         lambda[0] * user_consumption(layout, tr.state, tr.action, i);
      }
    }
    std::vector<Vec> g(n);
    for (int i = 0; i < n; ++i) g[i] = critic::mc_returns(per_user[i], gamma);
    for (std::size_t t = 0; t < T; ++t) {
      for (int i = 0; i < n; ++i) out.push_back(g[i][t]);
    }
  }
  return out;
}

}  // namespace

std::shared_ptr<diffusion::ScoreModel> train_behavior_model(const data::Dataset& data,
                                                            const TrainConfig& config, Rng& rng,
                                                            std::vector<double>* losses) {
  if (data.num_transitions() == 0) throw std::invalid_argument("train_behavior_model: empty dataset");
  const ModelSpace ms = build_model_space(data, config.mode);
  auto model = std::make_shared<diffusion::ScoreModel>(static_cast<int>(ms.states.rows()),
                                                       static_cast<int>(ms.actions.rows()),
                                                       data.layout.v_max, config.score, rng);
  model->set_state_normalizer(nn::Normalizer::fit_columns(ms.states));
  const std::size_t pairs = std::max<std::size_t>(
      1, std::min(data.num_transitions(), static_cast<std::size_t>(config.bc_batch) / ms.per_slot));
  const auto sampler = [&](Rng& r) {
    const auto picks = data::sample_pairs(data, pairs, r);
    Matrix s(ms.states.rows(), static_cast<Eigen::Index>(picks.size() * ms.per_slot));
    Matrix a(ms.actions.rows(), s.cols());
    Eigen::Index c = 0;
    for (const auto& [ep, t] : picks) {
      const auto base = static_cast<Eigen::Index>((ep * ms.T + t) * ms.per_slot);
      for (std::size_t u = 0; u < ms.per_slot; ++u, ++c) {
        s.col(c) = ms.states.col(base + u);
        a.col(c) = ms.actions.col(base + u);
      }
    }
    return std::make_pair(std::move(s), std::move(a));
  };
  std::vector<double> trace = diffusion::train_bc(*model, sampler, config.bc, rng);
  if (losses) *losses = std::move(trace);
  return model;
}

std::shared_ptr<critic::CriticPair> fit_critic_for_lambda(const data::Dataset& data,
                                                          const TrainConfig& config,
                                                          std::span<const double> lambda, Rng& rng,
                                                          double* final_loss) {
  if (data.num_transitions() == 0) throw std::invalid_argument("fit_critic_for_lambda: empty dataset");
  const ModelSpace ms = build_model_space(data, config.mode);
  const Vec returns = model_space_returns(data, config.mode, lambda, config.critic.gamma);
  auto pair = std::make_shared<critic::CriticPair>(static_cast<int>(ms.states.rows()),
                                                   static_cast<int>(ms.actions.rows()),
                                                   data.layout.v_max, config.critic, rng);
  pair->set_state_normalizer(nn::Normalizer::fit_columns(ms.states));
  const MeanStd g = mean_std(returns);
  pair->set_output_scale(g.mean, g.std > 1e-8 ? g.std : 1.0);

  const std::size_t traj_batch =
      std::min(data.num_trajectories(), static_cast<std::size_t>(config.critic.batch_trajectories));
  const auto sampler = [&](Rng& r) {
    const auto picks = data::sample_trajectories(data, traj_batch, r);
    const std::size_t per = static_cast<std::size_t>(config.critic.samples_per_trajectory);
    critic::CriticBatch b;
    const auto cols = static_cast<Eigen::Index>(picks.size() * per * ms.per_slot);
    b.states.resize(ms.states.rows(), cols);
    b.actions.resize(ms.actions.rows(), cols);
    b.returns.resize(cols);
    std::uniform_int_distribution<std::size_t> slot(0, ms.T - 1);
    Eigen::Index c = 0;
    for (std::size_t ep : picks) {
      for (std::size_t k = 0; k < per; ++k) {
        const std::size_t base = (ep * ms.T + slot(r)) * ms.per_slot;
        for (std::size_t u = 0; u < ms.per_slot; ++u, ++c) {
          const auto col = static_cast<Eigen::Index>(base + u);
          b.states.col(c) = ms.states.col(col);
          b.actions.col(c) = ms.actions.col(col);
          b.returns[c] = returns[base + u];
        }
      }
    }
    return b;
  };
  const std::vector<double> losses = critic::fit_critic(*pair, sampler, rng);
  if (final_loss) {
    const std::size_t tail = std::min<std::size_t>(100, losses.size());
    *final_loss = tail == 0 ? 0.0
                            : std::accumulate(losses.end() - static_cast<std::ptrdiff_t>(tail), losses.end(), 0.0) /
                                  static_cast<double>(tail);
  }
  return pair;
}

Vec estimate_policy_consumption(const data::Dataset& data, const SocdModels& models,
                                const TrainConfig& config, Rng& rng) {
  const auto policy = [&](const Matrix& states, std::size_t, Rng& r) {
    return select_actions(data.layout, models, states, config.selection, r);
  };
  const int n = std::min<int>(config.lagrange.consumption_trajectories,
                              static_cast<int>(data.num_trajectories()));
  return estimate_consumption(data, policy, n, rng, config.lagrange.per_node);
}

TrainResult train(const data::Dataset& data, const TrainConfig& config,
                  std::shared_ptr<const diffusion::ScoreModel> bc, std::optional<double> budget,
                  const ProgressFn& progress) {
  config.validate();
  env::AnyEnvConfig env_cfg = data.config;
  if (budget) env_cfg.set_total_budget(*budget);

  TrainResult result;
  if (bc) {
    result.models.bc = std::move(bc);
  } else {
    Rng bc_rng(derive_seed(config.seed, "bc"));
    result.models.bc = train_behavior_model(data, config, bc_rng, &result.bc_losses);
  }
  result.models.mode = config.mode;

  LagrangeState& lag = result.lagrange;
  lag.step = config.lagrange.step;
  lag.budget = config.lagrange.per_node ? env_cfg.node_budgets() : Vec{env_cfg.total_budget()};
  lag.lambda.assign(lag.budget.size(), config.lagrange.lambda0);

  for (int k = 0; k < config.lagrange.outer_iters; ++k) {
    IterationRecord rec;
    rec.iteration = k;
    rec.lambda = lag.lambda;
    rec.bc_hash = result.models.bc->hash();
    Rng critic_rng(derive_seed(config.seed, "critic", static_cast<std::uint64_t>(k)));
    result.models.critic = fit_critic_for_lambda(data, config, lag.lambda, critic_rng, &rec.critic_loss);
    Rng est_rng(derive_seed(config.seed, "estimate", static_cast<std::uint64_t>(k)));
    rec.e_hat = estimate_policy_consumption(data, result.models, config, est_rng);
    lag = lagrange_update(std::move(lag), rec.e_hat);
    rec.lambda_next = lag.lambda;
    if (progress) progress(rec);
    result.history.push_back(std::move(rec));
  }
  return result;
}

}  // namespace socd::core
