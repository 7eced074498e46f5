#pragma once

#include <functional>
#include <span>
#include <vector>

#include "socd/diffusion/schedule.hpp"
#include "socd/nn/adam.hpp"
#include "socd/nn/checkpoint.hpp"
#include "socd/nn/dense_net.hpp"
#include "socd/nn/fourier.hpp"
#include "socd/nn/normalizer.hpp"

namespace socd::diffusion {

using nn::Matrix;
using nn::Vector;

/// Earliest diffusion time used for training draws and as the sampler end point.
inline constexpr double kMinTime = 1e-3;

struct ScoreModelConfig {
  std::vector<int> hidden{128, 64, 64, 64};
  int state_embed = 56;
  int time_embed = 32;
  double fourier_scale = 30.0;
  DiffusionSchedule schedule{};

  /// Published network shape: hidden [512, 256, 256, 256], state embedding 224.
  static ScoreModelConfig paper_scale();
};

/// Conditional score network s(a_t, s, t) over actions normalised to [-1, 1].
///
/// The main network predicts the injected noise eps_hat from
/// [a_t | state embedding | time embedding]; the score is -eps_hat / sigma_t.
/// The state embedding is a learned affine map with SiLU over standardised states.
class ScoreModel {
 public:
  ScoreModel() = default;
  ScoreModel(int state_dim, int action_dim, double v_max, ScoreModelConfig config, Rng& rng);

  int state_dim() const { return state_net_.input_dim(); }
  int action_dim() const { return action_dim_; }
  double v_max() const { return v_max_; }
  const ScoreModelConfig& config() const { return config_; }
  const DiffusionSchedule& schedule() const { return config_.schedule; }

  /// [0, v_max] <-> [-1, 1]
  Matrix normalize_actions(const Matrix& raw) const;
  Matrix denormalize_actions(const Matrix& normalized) const;

  void set_state_normalizer(nn::Normalizer n);
  const nn::Normalizer& state_normalizer() const { return state_norm_; }

  Matrix embed_states(const Matrix& states) const;
  Matrix predict_noise(const Matrix& x_t, const Matrix& state_embedding,
                       std::span<const double> t) const;
  Matrix score(const Matrix& x_t, const Matrix& states, std::span<const double> t) const;

  nn::DenseNet& state_net() { return state_net_; }
  nn::DenseNet& main_net() { return main_net_; }
  const nn::DenseNet& state_net() const { return state_net_; }
  const nn::DenseNet& main_net() const { return main_net_; }
  const nn::FourierTimeEmbedding& time_embedding() const { return time_embed_; }

  /// Content hash over every parameter, the embedding frequencies and normalisers.
  std::uint64_t hash() const;
  std::size_t param_count() const { return state_net_.param_count() + main_net_.param_count(); }

  nn::Checkpoint to_checkpoint() const;
  static ScoreModel from_checkpoint(const nn::Checkpoint& ckpt);

 private:
  int action_dim_ = 0;
  double v_max_ = 1.0;
  ScoreModelConfig config_;
  nn::DenseNet state_net_;
  nn::DenseNet main_net_;
  nn::FourierTimeEmbedding time_embed_;
  nn::Normalizer state_norm_;
};

/// Training draws for one batch: t in (kMinTime, 1] and eps ~ N(0, I).
struct NoiseDraw {
  std::vector<double> t;
  Matrix eps;  // action_dim x batch
};
NoiseDraw draw_noise(int action_dim, int batch, Rng& rng);

/// Noise predictor eps_hat(x_t, states, t); lets tests inject analytic scores.
using BatchNoiseFn =
    std::function<Matrix(const Matrix& x_t, const Matrix& states, std::span<const double> t)>;

/// Denoising score-matching loss mean ||sigma_t s(alpha_t a + sigma_t eps, s, t) + eps||^2
/// for an arbitrary predictor. Actions are normalised, one column per pair.
double bc_loss_value(const BatchNoiseFn& predictor, const DiffusionSchedule& schedule,
                     const Matrix& states, const Matrix& actions, Rng& rng);

struct BcLoss {
  double loss = 0.0;
  nn::Gradients state_grads;
  nn::Gradients main_grads;
};

/// Same loss for the model, with reverse-mode gradients. Throws on an empty batch.
BcLoss bc_loss(const ScoreModel& model, const Matrix& states, const Matrix& actions, Rng& rng);

/// Noise predictor for a fixed conditioning context.
using NoiseFn = std::function<Matrix(const Matrix& x_t, double t)>;

/// First-order exponential integrator of the probability-flow ODE from t = 1
/// down to t_end on a uniform time grid. Returns the raw (unclipped) end point.
Matrix integrate_ode(const NoiseFn& predictor, const DiffusionSchedule& schedule, Matrix x,
                     int steps, double t_end = kMinTime);

/// K normalised samples for one state, clipped to [-1, 1]. Column per sample.
Matrix sample_normalized(const ScoreModel& model, std::span<const double> state, int count,
                         int steps, Rng& rng);
/// `count` samples for every column of `states`; sample k of state b is column
/// b * count + k. Noise is drawn column by column.
Matrix sample_normalized_batch(const ScoreModel& model, const Matrix& states, int count, int steps,
                               Rng& rng);

/// K samples de-normalised to [0, v_max].
Matrix sample(const ScoreModel& model, std::span<const double> state, int count, int steps,
              Rng& rng);

/// Draws one minibatch (states S x B, raw actions A x B).
using PairSampler = std::function<std::pair<Matrix, Matrix>(Rng& rng)>;

struct BcTrainConfig {
  int steps = 5000;
  double lr = 1e-4;
};

/// Runs `steps` Adam updates on both networks; returns the loss trace.
std::vector<double> train_bc(ScoreModel& model, const PairSampler& sampler,
                             const BcTrainConfig& config, Rng& rng);

}  // namespace socd::diffusion
