#include "socd/diffusion/score_model.hpp"

#include <cmath>
#include <stdexcept>

namespace socd::diffusion {

using nlohmann::json;

ScoreModelConfig ScoreModelConfig::paper_scale() {
  ScoreModelConfig c;
  c.hidden = {512, 256, 256, 256};
  c.state_embed = 224;
  return c;
}

ScoreModel::ScoreModel(int state_dim, int action_dim, double v_max, ScoreModelConfig config,
                       Rng& rng)
    : action_dim_(action_dim), v_max_(v_max), config_(std::move(config)) {
  if (state_dim <= 0 || action_dim <= 0) throw std::invalid_argument("ScoreModel: empty dims");
  if (!(v_max > 0.0)) throw std::invalid_argument("ScoreModel: v_max must be positive");
  state_net_ = nn::DenseNet::random({state_dim, config_.state_embed}, {nn::Activation::Silu}, rng);
  std::vector<int> sizes{action_dim + config_.state_embed + config_.time_embed};
  std::vector<nn::Activation> acts;
  for (int h : config_.hidden) {
    sizes.push_back(h);
    acts.push_back(nn::Activation::Silu);
  }
  sizes.push_back(action_dim);
  acts.push_back(nn::Activation::Identity);
  main_net_ = nn::DenseNet::random(sizes, acts, rng);
  time_embed_ = nn::FourierTimeEmbedding(config_.time_embed, config_.fourier_scale, rng);
  state_norm_ = nn::Normalizer::identity(state_dim);
}

Matrix ScoreModel::normalize_actions(const Matrix& raw) const {
  return (raw.array() * (2.0 / v_max_) - 1.0).matrix();
}

Matrix ScoreModel::denormalize_actions(const Matrix& normalized) const {
  return ((normalized.array() + 1.0) * (0.5 * v_max_)).matrix();
}

void ScoreModel::set_state_normalizer(nn::Normalizer n) {
  if (n.dim() != static_cast<std::size_t>(state_dim())) {
    throw std::invalid_argument("ScoreModel: normaliser dimension mismatch");
  }
  state_norm_ = std::move(n);
}

Matrix ScoreModel::embed_states(const Matrix& states) const {
  return state_net_.forward(state_norm_.apply(states));
}

namespace {

Matrix stack_inputs(const Matrix& x_t, const Matrix& emb, const Matrix& time) {
  Matrix in(x_t.rows() + emb.rows() + time.rows(), x_t.cols());
  in << x_t, emb, time;
  return in;
}

Matrix broadcast_cols(const Matrix& m, Eigen::Index cols) {
  if (m.cols() == cols) return m;
  if (m.cols() != 1) throw std::invalid_argument("state embedding column count mismatch");
  return m.replicate(1, cols);
}

}  // namespace

Matrix ScoreModel::predict_noise(const Matrix& x_t, const Matrix& state_embedding,
                                 std::span<const double> t) const {
  if (x_t.rows() != action_dim_) throw std::invalid_argument("predict_noise: action dim mismatch");
  if (static_cast<Eigen::Index>(t.size()) != x_t.cols()) {
    throw std::invalid_argument("predict_noise: one time value per column required");
  }
  return main_net_.forward(
      stack_inputs(x_t, broadcast_cols(state_embedding, x_t.cols()), time_embed_.embed(t)));
}

Matrix ScoreModel::score(const Matrix& x_t, const Matrix& states, std::span<const double> t) const {
  Matrix eps = predict_noise(x_t, embed_states(states), t);
  for (Eigen::Index c = 0; c < eps.cols(); ++c) eps.col(c) /= -schedule().sigma(t[c]);
  return eps;
}

std::uint64_t ScoreModel::hash() const {
  Vec extra = time_embed_.frequencies();
  extra.insert(extra.end(), state_norm_.mean.begin(), state_norm_.mean.end());
  extra.insert(extra.end(), state_norm_.scale.begin(), state_norm_.scale.end());
  extra.push_back(v_max_);
  std::uint64_t h = fnv1a64(std::span<const double>(extra));
  h = h * 31 + state_net_.hash();
  h = h * 31 + main_net_.hash();
  return h;
}

nn::Checkpoint ScoreModel::to_checkpoint() const {
  nn::Checkpoint c;
  c.kind = "score_model";
  c.meta = {{"action_dim", action_dim_},
            {"v_max", v_max_},
            {"hidden", config_.hidden},
            {"state_embed", config_.state_embed},
            {"time_embed", config_.time_embed},
            {"fourier_scale", config_.fourier_scale},
            {"frequencies", time_embed_.frequencies()},
            {"state_normalizer", state_norm_.to_json()},
            {"schedule",
             {{"omega_min", config_.schedule.omega_min},
              {"omega_max", config_.schedule.omega_max},
              {"horizon", 1.0},
              {"t_end", kMinTime}}}};
  c.nets.emplace_back("state", state_net_);
  c.nets.emplace_back("main", main_net_);
  return c;
}

ScoreModel ScoreModel::from_checkpoint(const nn::Checkpoint& ckpt) {
  if (ckpt.kind != "score_model") throw DataFormatError("checkpoint is not a score model");
  try {
    ScoreModel m;
    const json& meta = ckpt.meta;
    m.action_dim_ = meta.at("action_dim").get<int>();
    m.v_max_ = meta.at("v_max").get<double>();
    m.config_.hidden = meta.at("hidden").get<std::vector<int>>();
    m.config_.state_embed = meta.at("state_embed").get<int>();
    m.config_.time_embed = meta.at("time_embed").get<int>();
    m.config_.fourier_scale = meta.at("fourier_scale").get<double>();
    m.config_.schedule.omega_min = meta.at("schedule").at("omega_min").get<double>();
    m.config_.schedule.omega_max = meta.at("schedule").at("omega_max").get<double>();
    m.time_embed_ = nn::FourierTimeEmbedding(meta.at("frequencies").get<Vec>(), m.config_.fourier_scale);
    m.state_net_ = ckpt.net("state");
    m.main_net_ = ckpt.net("main");
    m.state_norm_ = nn::Normalizer::from_json(meta.at("state_normalizer"));
    if (m.main_net_.output_dim() != m.action_dim_ ||
        m.main_net_.input_dim() != m.action_dim_ + m.config_.state_embed + m.config_.time_embed ||
        m.state_norm_.dim() != static_cast<std::size_t>(m.state_net_.input_dim())) {
      throw DataFormatError("score model checkpoint shapes are inconsistent");
    }
    return m;
  } catch (const json::exception& e) {
    throw DataFormatError(std::string("score model checkpoint: ") + e.what());
  }
}

NoiseDraw draw_noise(int action_dim, int batch, Rng& rng) {
  NoiseDraw d;
  d.t.resize(batch);
  d.eps.resize(action_dim, batch);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int b = 0; b < batch; ++b) {
    d.t[b] = 1.0 - u(rng) * (1.0 - kMinTime);
    for (int k = 0; k < action_dim; ++k) d.eps(k, b) = n(rng);
  }
  return d;
}

namespace {

Matrix perturb(const DiffusionSchedule& schedule, const Matrix& actions, const NoiseDraw& d) {
  Matrix x(actions.rows(), actions.cols());
  for (Eigen::Index b = 0; b < actions.cols(); ++b) {
    const auto c = schedule.coeffs(d.t[b]);
    x.col(b) = c.alpha * actions.col(b) + c.sigma * d.eps.col(b);
  }
  return x;
}

}  // namespace

double bc_loss_value(const BatchNoiseFn& predictor, const DiffusionSchedule& schedule,
                     const Matrix& states, const Matrix& actions, Rng& rng) {
  if (actions.cols() == 0) throw std::invalid_argument("bc_loss: empty batch");
  const NoiseDraw d = draw_noise(static_cast<int>(actions.rows()), static_cast<int>(actions.cols()), rng);
  const Matrix x = perturb(schedule, actions, d);
  const Matrix eps_hat = predictor(x, states, d.t);
  // sigma * s + eps with s = -eps_hat / sigma
  return (d.eps - eps_hat).squaredNorm() / static_cast<double>(actions.cols());
}

BcLoss bc_loss(const ScoreModel& model, const Matrix& states, const Matrix& actions, Rng& rng) {
  const auto batch = actions.cols();
  if (batch == 0) throw std::invalid_argument("bc_loss: empty batch");
  if (states.cols() != batch) throw std::invalid_argument("bc_loss: states/actions batch mismatch");
  const NoiseDraw d = draw_noise(model.action_dim(), static_cast<int>(batch), rng);
  const Matrix x = perturb(model.schedule(), actions, d);

  nn::ForwardCache state_cache, main_cache;
  const Matrix emb = model.state_net().forward(model.state_normalizer().apply(states), state_cache);
  Matrix in(x.rows() + emb.rows() + model.config().time_embed, batch);
  in << x, emb, model.time_embedding().embed(d.t);
  const Matrix eps_hat = model.main_net().forward(in, main_cache);

  BcLoss out;
  const Matrix diff = eps_hat - d.eps;
  out.loss = diff.squaredNorm() / static_cast<double>(batch);
  const Matrix upstream = diff * (2.0 / static_cast<double>(batch));
  Matrix input_grad;
  out.main_grads = model.main_net().backward(main_cache, upstream, &input_grad);
  const Matrix emb_grad = input_grad.middleRows(x.rows(), emb.rows());
  out.state_grads = model.state_net().backward(state_cache, emb_grad);
  return out;
}

Matrix integrate_ode(const NoiseFn& predictor, const DiffusionSchedule& schedule, Matrix x,
                     int steps, double t_end) {
  if (steps < 1) throw std::invalid_argument("integrate_ode: steps must be >= 1");
  // grid uniform in half log-SNR
  const double l_start = schedule.half_log_snr(1.0);
  const double dl = (schedule.half_log_snr(t_end) - l_start) / steps;
  for (int i = 0; i < steps; ++i) {
    const double t_cur = i == 0 ? 1.0 : schedule.time_at(l_start + i * dl);
    const double t_next = i + 1 == steps ? t_end : schedule.time_at(l_start + (i + 1) * dl);
    const auto cur = schedule.coeffs(t_cur);
    const auto next = schedule.coeffs(t_next);
    const double h = schedule.half_log_snr(t_next) - schedule.half_log_snr(t_cur);
    const Matrix eps_hat = predictor(x, t_cur);
    x = (next.alpha / cur.alpha) * x - (next.sigma * std::expm1(h)) * eps_hat;
  }
  return x;
}

Matrix sample_normalized_batch(const ScoreModel& model, const Matrix& states, int count, int steps,
                               Rng& rng) {
  if (count < 1) throw std::invalid_argument("sample: count must be >= 1");
  if (states.rows() != model.state_dim()) throw std::invalid_argument("sample: state dimension mismatch");
  const Matrix per_state = model.embed_states(states);
  const Eigen::Index total = states.cols() * count;
  Matrix emb(per_state.rows(), total);
  for (Eigen::Index b = 0; b < states.cols(); ++b) emb.middleCols(b * count, count) = per_state.col(b).replicate(1, count);
  Matrix x(model.action_dim(), total);
  std::normal_distribution<double> n(0.0, 1.0);
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    for (Eigen::Index r = 0; r < x.rows(); ++r) x(r, c) = n(rng);
  }
  std::vector<double> t(total);
  auto predictor = [&](const Matrix& xt, double time) {
    std::fill(t.begin(), t.end(), time);
    return model.predict_noise(xt, emb, t);
  };
  x = integrate_ode(predictor, model.schedule(), std::move(x), steps);
  return x.cwiseMax(-1.0).cwiseMin(1.0);
}

Matrix sample_normalized(const ScoreModel& model, std::span<const double> state, int count,
                         int steps, Rng& rng) {
  if (static_cast<int>(state.size()) != model.state_dim()) {
    throw std::invalid_argument("sample: state dimension mismatch");
  }
  const Matrix s = Eigen::Map<const Matrix>(state.data(), model.state_dim(), 1);
  return sample_normalized_batch(model, s, count, steps, rng);
}

Matrix sample(const ScoreModel& model, std::span<const double> state, int count, int steps,
              Rng& rng) {
  return model.denormalize_actions(sample_normalized(model, state, count, steps, rng));
}

std::vector<double> train_bc(ScoreModel& model, const PairSampler& sampler,
                             const BcTrainConfig& config, Rng& rng) {
  nn::Adam opt_state(model.state_net(), {.lr = config.lr});
  nn::Adam opt_main(model.main_net(), {.lr = config.lr});
  std::vector<double> losses;
  losses.reserve(config.steps);
  for (int step = 0; step < config.steps; ++step) {
    auto [states, raw_actions] = sampler(rng);
    const BcLoss l = bc_loss(model, states, model.normalize_actions(raw_actions), rng);
    opt_state.step(model.state_net(), l.state_grads);
    opt_main.step(model.main_net(), l.main_grads);
    losses.push_back(l.loss);
  }
  return losses;
}

}  // namespace socd::diffusion
