#pragma once

#include <functional>
#include <span>
#include <vector>

#include "socd/nn/adam.hpp"
#include "socd/nn/checkpoint.hpp"
#include "socd/nn/dense_net.hpp"
#include "socd/nn/normalizer.hpp"

namespace socd::critic {

using nn::Matrix;

struct CriticConfig {
  std::vector<int> hidden{64, 64};
  double gamma = 0.8;
  double rho = 0.05;
  double lr = 3e-4;
  int steps = 3000;
  int batch_trajectories = 50;
  int samples_per_trajectory = 4;

  /// Published shape: two hidden layers of 256 units.
  static CriticConfig paper_scale();
};

/// Discounted returns G_t = r_t + gamma G_{t+1}, G_{T+1} = 0, by backward recursion.
Vec mc_returns(std::span<const double> rewards, double gamma);

/// Twin state-action value networks over [state | action] with soft-updated targets.
/// Each Q_k = shift + scale * net_k(standardised state, action in [-1, 1]).
class CriticPair {
 public:
  CriticPair() = default;
  CriticPair(int state_dim, int action_dim, double v_max, CriticConfig config, Rng& rng);

  int state_dim() const { return state_dim_; }
  int action_dim() const { return action_dim_; }
  const CriticConfig& config() const { return config_; }

  void set_state_normalizer(nn::Normalizer n);
  /// Output affine map; targets are learned in units of `scale` around `shift`.
  void set_output_scale(double shift, double scale);
  double output_shift() const { return shift_; }
  double output_scale() const { return scale_; }

  Matrix inputs(const Matrix& states, const Matrix& raw_actions) const;

  /// min(Q1, Q2) per column.
  Vec q_values(const Matrix& states, const Matrix& raw_actions) const;
  double q_value(std::span<const double> state, std::span<const double> action) const;
  /// Both online outputs, rows 0 and 1.
  Matrix twin_values(const Matrix& states, const Matrix& raw_actions) const;
  Matrix target_values(const Matrix& states, const Matrix& raw_actions) const;

  nn::DenseNet& q(int k) { return k == 0 ? q1_ : q2_; }
  const nn::DenseNet& q(int k) const { return k == 0 ? q1_ : q2_; }
  const nn::DenseNet& target(int k) const { return k == 0 ? t1_ : t2_; }
  nn::DenseNet& target(int k) { return k == 0 ? t1_ : t2_; }

  /// target <- rho * online + (1 - rho) * target, for both networks.
  void soft_update(double rho);

  nn::Checkpoint to_checkpoint() const;
  static CriticPair from_checkpoint(const nn::Checkpoint& ckpt);

 private:
  int state_dim_ = 0;
  int action_dim_ = 0;
  double v_max_ = 1.0;
  CriticConfig config_;
  nn::DenseNet q1_, q2_, t1_, t2_;
  nn::Normalizer state_norm_;
  double shift_ = 0.0;
  double scale_ = 1.0;
};

struct CriticLoss {
  double loss = 0.0;
  nn::Gradients grad1;
  nn::Gradients grad2;
};

/// mean (min_k Q_k(s, a) - G)^2. Each sample's gradient flows only into the
/// network attaining the minimum (Q1 on ties). Throws on an empty batch.
CriticLoss critic_loss(const CriticPair& pair, const Matrix& states, const Matrix& raw_actions,
                       std::span<const double> returns);

struct CriticBatch {
  Matrix states;
  Matrix actions;
  Vec returns;
};
using CriticSampler = std::function<CriticBatch(Rng& rng)>;

/// Minimises critic_loss with Adam for config.steps updates, soft-updating the
/// targets after each. Returns the loss trace.
std::vector<double> fit_critic(CriticPair& pair, const CriticSampler& sampler, Rng& rng);

}  // namespace socd::critic
