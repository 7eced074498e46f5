#include "socd/critic/critic.hpp"

#include <stdexcept>

namespace socd::critic {

using nlohmann::json;

CriticConfig CriticConfig::paper_scale() {
  CriticConfig c;
  c.hidden = {256, 256};
  return c;
}

Vec mc_returns(std::span<const double> rewards, double gamma) {
  Vec g(rewards.size(), 0.0);
  double next = 0.0;
  for (std::size_t t = rewards.size(); t-- > 0;) {
    next = rewards[t] + gamma * next;
    g[t] = next;
  }
  return g;
}

namespace {

nn::DenseNet make_q(int in, const std::vector<int>& hidden, Rng& rng) {
  std::vector<int> sizes{in};
  std::vector<nn::Activation> acts;
  for (int h : hidden) {
    sizes.push_back(h);
    acts.push_back(nn::Activation::Relu);
  }
  sizes.push_back(1);
  acts.push_back(nn::Activation::Identity);
  return nn::DenseNet::random(sizes, acts, rng);
}

void blend(nn::DenseNet& target, const nn::DenseNet& online, double rho) {
  for (std::size_t l = 0; l < online.num_layers(); ++l) {
    nn::Layer& t = target.mutable_layer(l);
    const nn::Layer& o = online.layer(l);
    t.weight = rho * o.weight + (1.0 - rho) * t.weight;
    t.bias = rho * o.bias + (1.0 - rho) * t.bias;
  }
}

}  // namespace

CriticPair::CriticPair(int state_dim, int action_dim, double v_max, CriticConfig config, Rng& rng)
    : state_dim_(state_dim), action_dim_(action_dim), v_max_(v_max), config_(std::move(config)) {
  if (!(config_.gamma > 0.0 && config_.gamma <= 1.0)) throw std::invalid_argument("gamma must be in (0, 1]");
  if (!(config_.rho > 0.0 && config_.rho <= 1.0)) throw std::invalid_argument("rho must be in (0, 1]");
  q1_ = make_q(state_dim + action_dim, config_.hidden, rng);
  q2_ = make_q(state_dim + action_dim, config_.hidden, rng);
  t1_ = q1_;
  t2_ = q2_;
  t1_.touch();
  t2_.touch();
  state_norm_ = nn::Normalizer::identity(state_dim);
}

void CriticPair::set_state_normalizer(nn::Normalizer n) {
  if (n.dim() != static_cast<std::size_t>(state_dim_)) {
    throw std::invalid_argument("CriticPair: normaliser dimension mismatch");
  }
  state_norm_ = std::move(n);
}

void CriticPair::set_output_scale(double shift, double scale) {
  if (!(scale > 0.0)) throw std::invalid_argument("CriticPair: output scale must be positive");
  shift_ = shift;
  scale_ = scale;
}

Matrix CriticPair::inputs(const Matrix& states, const Matrix& raw_actions) const {
  if (states.rows() != state_dim_ || raw_actions.rows() != action_dim_ ||
      states.cols() != raw_actions.cols()) {
    throw std::invalid_argument("critic: state/action shape mismatch");
  }
  Matrix in(state_dim_ + action_dim_, states.cols());
  in << state_norm_.apply(states), (raw_actions.array() * (2.0 / v_max_) - 1.0).matrix();
  return in;
}

Matrix CriticPair::twin_values(const Matrix& states, const Matrix& raw_actions) const {
  const Matrix in = inputs(states, raw_actions);
  Matrix out(2, in.cols());
  out.row(0) = (q1_.forward(in).array() * scale_ + shift_).matrix();
  out.row(1) = (q2_.forward(in).array() * scale_ + shift_).matrix();
  return out;
}

Matrix CriticPair::target_values(const Matrix& states, const Matrix& raw_actions) const {
  const Matrix in = inputs(states, raw_actions);
  Matrix out(2, in.cols());
  out.row(0) = (t1_.forward(in).array() * scale_ + shift_).matrix();
  out.row(1) = (t2_.forward(in).array() * scale_ + shift_).matrix();
  return out;
}

Vec CriticPair::q_values(const Matrix& states, const Matrix& raw_actions) const {
  const Matrix twin = twin_values(states, raw_actions);
  Vec q(twin.cols());
  for (Eigen::Index c = 0; c < twin.cols(); ++c) q[c] = std::min(twin(0, c), twin(1, c));
  return q;
}

double CriticPair::q_value(std::span<const double> state, std::span<const double> action) const {
  Matrix s(state_dim_, 1), a(action_dim_, 1);
  if (state.size() != static_cast<std::size_t>(state_dim_) ||
      action.size() != static_cast<std::size_t>(action_dim_)) {
    throw std::invalid_argument("q_value: state/action shape mismatch");
  }
  for (int k = 0; k < state_dim_; ++k) s(k, 0) = state[k];
  for (int k = 0; k < action_dim_; ++k) a(k, 0) = action[k];
  return q_values(s, a)[0];
}

void CriticPair::soft_update(double rho) {
  if (!(rho > 0.0 && rho <= 1.0)) throw std::invalid_argument("soft_update: rho must be in (0, 1]");
  blend(t1_, q1_, rho);
  blend(t2_, q2_, rho);
}

nn::Checkpoint CriticPair::to_checkpoint() const {
  nn::Checkpoint c;
  c.kind = "critic_pair";
  c.meta = {{"state_dim", state_dim_},
            {"action_dim", action_dim_},
            {"v_max", v_max_},
            {"gamma", config_.gamma},
            {"rho", config_.rho},
            {"hidden", config_.hidden},
            {"shift", shift_},
            {"scale", scale_},
            {"state_normalizer", state_norm_.to_json()}};
  c.nets = {{"q1", q1_}, {"q2", q2_}, {"target1", t1_}, {"target2", t2_}};
  return c;
}

CriticPair CriticPair::from_checkpoint(const nn::Checkpoint& ckpt) {
  if (ckpt.kind != "critic_pair") throw DataFormatError("checkpoint is not a critic pair");
  try {
    CriticPair p;
    const json& m = ckpt.meta;
    p.state_dim_ = m.at("state_dim").get<int>();
    p.action_dim_ = m.at("action_dim").get<int>();
    p.v_max_ = m.at("v_max").get<double>();
    p.config_.gamma = m.at("gamma").get<double>();
    p.config_.rho = m.at("rho").get<double>();
    p.config_.hidden = m.at("hidden").get<std::vector<int>>();
    p.shift_ = m.at("shift").get<double>();
    p.scale_ = m.at("scale").get<double>();
    p.state_norm_ = nn::Normalizer::from_json(m.at("state_normalizer"));
    p.q1_ = ckpt.net("q1");
    p.q2_ = ckpt.net("q2");
    p.t1_ = ckpt.net("target1");
    p.t2_ = ckpt.net("target2");
    if (p.q1_.input_dim() != p.state_dim_ + p.action_dim_) {
      throw DataFormatError("critic checkpoint shapes are inconsistent");
    }
    return p;
  } catch (const json::exception& e) {
    throw DataFormatError(std::string("critic checkpoint: ") + e.what());
  }
}

CriticLoss critic_loss(const CriticPair& pair, const Matrix& states, const Matrix& raw_actions,
                       std::span<const double> returns) {
  const auto batch = states.cols();
  if (batch == 0) throw std::invalid_argument("critic_loss: empty batch");
  if (static_cast<Eigen::Index>(returns.size()) != batch) {
    throw std::invalid_argument("critic_loss: one return per sample required");
  }
  const Matrix in = pair.inputs(states, raw_actions);
  nn::ForwardCache c1, c2;
  const Matrix o1 = pair.q(0).forward(in, c1);
  const Matrix o2 = pair.q(1).forward(in, c2);
  const double scale = pair.output_scale(), shift = pair.output_shift();
  Matrix up1 = Matrix::Zero(1, batch), up2 = Matrix::Zero(1, batch);
  CriticLoss out;
  for (Eigen::Index b = 0; b < batch; ++b) {
    const double q1 = shift + scale * o1(0, b);
    const double q2 = shift + scale * o2(0, b);
    const double err = std::min(q1, q2) - returns[b];
    out.loss += err * err;
    const double g = 2.0 * err * scale / static_cast<double>(batch);
    if (q1 <= q2) up1(0, b) = g;
    else up2(0, b) = g;
  }
  out.loss /= static_cast<double>(batch);
  out.grad1 = pair.q(0).backward(c1, up1);
  out.grad2 = pair.q(1).backward(c2, up2);
  return out;
}

std::vector<double> fit_critic(CriticPair& pair, const CriticSampler& sampler, Rng& rng) {
  const CriticConfig& cfg = pair.config();
  nn::Adam opt1(pair.q(0), {.lr = cfg.lr});
  nn::Adam opt2(pair.q(1), {.lr = cfg.lr});
  std::vector<double> losses;
  losses.reserve(cfg.steps);
  for (int step = 0; step < cfg.steps; ++step) {
    const CriticBatch batch = sampler(rng);
    const CriticLoss l = critic_loss(pair, batch.states, batch.actions, batch.returns);
    opt1.step(pair.q(0), l.grad1);
    opt2.step(pair.q(1), l.grad2);
    pair.soft_update(cfg.rho);
    losses.push_back(l.loss);
  }
  return losses;
}

}  // namespace socd::critic
