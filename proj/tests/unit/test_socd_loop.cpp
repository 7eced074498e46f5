#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "socd/core/decompose.hpp"
#include "socd/core/lagrange.hpp"
#include "socd/core/selection.hpp"
#include "socd/core/socd_policy.hpp"
#include "socd/core/trainer.hpp"
#include "socd/data/dataset.hpp"

using namespace socd;
using namespace socd::core;

namespace {

env::AnyEnvConfig one_hop(int episode_len) {
  env::AnyEnvConfig c;
  c.single = env::preset_single("poisson-1hop");
  c.single.episode_len = episode_len;
  return c;
}

data::Dataset small_dataset(int J, int T, std::uint64_t seed, bool partial = false) {
  auto cfg = one_hop(T);
  cfg.single.partial_obs = partial;
  policy::NoisyEdfParams p;
  p.budgets = cfg.node_budgets();
  return data::generate(cfg, p, J, seed);
}

TrainConfig tiny_config() {
  TrainConfig c;
  c.score.hidden = {32, 32};
  c.score.state_embed = 16;
  c.score.time_embed = 16;
  c.bc.steps = 40;
  c.bc_batch = 64;
  c.critic.hidden = {16, 16};
  c.critic.steps = 40;
  c.critic.batch_trajectories = 4;
  c.selection.samples = 4;
  c.selection.steps = 3;
  c.lagrange.outer_iters = 3;
  c.lagrange.consumption_trajectories = 3;
  c.seed = 5;
  return c;
}

}  // namespace

TEST_CASE("softmax weights") {
  const Vec w = selection_weights(Vec{1.0, 2.0}, 1.0);
  CHECK(w[0] == doctest::Approx(0.2689414213699951).epsilon(1e-12));
  CHECK(w[1] == doctest::Approx(0.7310585786300049).epsilon(1e-12));
  Rng rng(1);
  std::normal_distribution<double> n(0.0, 5.0);
  for (int k = 0; k < 200; ++k) {
    Vec q(1 + k % 32);
    for (double& x : q) x = n(rng);
    const double temp = std::exp(std::uniform_real_distribution<double>(-3.0, 8.0)(rng));
    const Vec wk = selection_weights(q, temp);
    double sum = 0.0;
    for (double x : wk) {
      CHECK(x >= 0.0);
      sum += x;
    }
    CHECK(std::abs(sum - 1.0) <= 1e-12);
    Vec shifted = q;
    for (double& x : shifted) x += 1234.5;
    const Vec ws = selection_weights(shifted, temp);
    for (std::size_t i = 0; i < q.size(); ++i) CHECK(ws[i] == doctest::Approx(wk[i]).epsilon(1e-9));
  }
  // Large values do not overflow.
  const Vec big = selection_weights(Vec{1e6, 1e6 + 1.0}, 100.0);
  CHECK(big[1] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("argmax picks the first maximum and bounds every candidate") {
  CHECK(argmax_index(Vec{1, 3, 3, 2}) == 1);
  CHECK(argmax_index(Vec{-1}) == 0);
  Rng rng(2);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int k = 0; k < 100; ++k) {
    Vec q(16);
    for (double& x : q) x = n(rng);
    const std::size_t i = argmax_index(q);
    for (double x : q) CHECK(q[i] >= x);
  }
}

TEST_CASE("selection limit, single candidate and convex hull") {
  Rng rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  SelectionConfig is;
  SelectionConfig am;
  am.mode = SelectionMode::Argmax;
  for (int k = 0; k < 100; ++k) {
    Matrix cand = Matrix::NullaryExpr(5, 16, [&] { return u(rng); });
    Vec q(16);
    for (double& x : q) x = n(rng);
    is.temperature = 1e6;
    const Vec hard = select_from(cand, q, am);
    CHECK(select_from(cand, q, is) == hard);
    const std::size_t best = argmax_index(q);
    for (int r = 0; r < 5; ++r) CHECK(hard[r] == cand(r, best));
    is.temperature = 1.0;
    const Vec soft = select_from(cand, q, is);
    for (int r = 0; r < 5; ++r) {
      CHECK(soft[r] >= cand.row(r).minCoeff() - 1e-12);
      CHECK(soft[r] <= cand.row(r).maxCoeff() + 1e-12);
    }
    const Matrix one = cand.leftCols(1);
    const Vec q1{q[0]};
    const Vec only(one.data(), one.data() + 5);
    CHECK(select_from(one, q1, is) == only);
    CHECK(select_from(one, q1, am) == only);
  }
}

TEST_CASE("selection config validation and serialisation") {
  SelectionConfig c;
  c.samples = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.samples = 4;
  c.temperature = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.temperature = 5.0;
  c.mode = SelectionMode::Argmax;
  const SelectionConfig back = SelectionConfig::from_json(c.to_json());
  CHECK(back.mode == SelectionMode::Argmax);
  CHECK(back.samples == 4);
  CHECK(back.temperature == 5.0);
}

TEST_CASE("guided readout stays within the action box") {
  Rng rng(4);
  diffusion::ScoreModel bc(6, 3, 2.0, {}, rng);
  critic::CriticPair q(6, 3, 2.0, {}, rng);
  SelectionConfig cfg;
  cfg.samples = 16;
  cfg.steps = 4;
  const Vec s{1, 0, 2, 3, 0.5, 1};
  Rng a(7), b(7);
  const Vec x = select_action(s, bc, q, cfg, a);
  CHECK(x == select_action(s, bc, q, cfg, b));
  for (double v : x) {
    CHECK(v >= 0.0);
    CHECK(v <= 2.0);
  }
  cfg.samples = 1;
  Rng c(9), d(9);
  const Matrix one = diffusion::sample(bc, s, 1, 4, d);
  const Vec single = select_action(s, bc, q, cfg, c);
  for (int r = 0; r < 3; ++r) CHECK(single[r] == one(r, 0));
}

TEST_CASE("per-user decomposition") {
  const auto l = env::ObsLayout::single_hop(env::preset_single("poisson-1hop"));
  const UserView v = UserView::from(l);
  CHECK(v.max_deadline == 6);
  CHECK(v.state_dim() == 10);
  CHECK(v.action_dim() == 7);
  Vec obs(l.obs_dim());
  for (std::size_t k = 0; k < obs.size(); ++k) obs[k] = 100.0 + k;
  // User 2 owns cells 10..14 (deadline 4).
  const Vec sub = decompose_state(l, obs, 2);
  CHECK(sub.size() == 10);
  CHECK(sub[0] == 0.5);
  CHECK(sub[1] == obs[2]);
  for (int t = 0; t <= 4; ++t) CHECK(sub[2 + t] == obs[l.queue_offset() + 10 + t]);
  CHECK(sub[7] == 0.0);
  CHECK(sub[8] == 0.0);
  CHECK(sub[9] == obs[l.channel_offset() + 2]);
  CHECK_THROWS_AS(decompose_state(l, obs, 4), std::out_of_range);
  CHECK_THROWS_AS(decompose_state(l, obs, -1), std::out_of_range);

  env::EnvConfig partial = env::preset_single("poisson-1hop");
  partial.partial_obs = true;
  const auto lp = env::ObsLayout::single_hop(partial);
  CHECK(UserView::from(lp).state_dim() == 9);
  Vec po(lp.obs_dim(), 1.0);
  CHECK(decompose_state(lp, po, 0).size() == 9);

  env::AnyEnvConfig mh;
  mh.multihop = env::preset_multihop("poisson-2hop");
  const auto lm = env::ObsLayout::from(mh);
  CHECK_THROWS_AS(decompose_state(lm, Vec(lm.obs_dim(), 0.0), 0), std::invalid_argument);

  // Partition: per-user slices reassemble the global action and split its consumption.
  Rng rng(5);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  Vec action(l.action_dim());
  for (double& a : action) a = u(rng);
  Vec rebuilt(l.action_dim(), -1.0);
  double total = 0.0;
  std::size_t covered = 0;
  for (int i = 0; i < l.num_users; ++i) {
    const Vec ui = user_action(l, action, i);
    CHECK(ui.size() == v.action_dim());
    scatter_user_action(l, i, ui, rebuilt);
    covered += l.deadlines[i] + 1;
    total += user_consumption(l, obs, action, i);
  }
  CHECK(covered == l.action_dim());
  CHECK(rebuilt == action);
  CHECK(total == doctest::Approx(l.consumption(obs, action)).epsilon(1e-12));
}

TEST_CASE("projected dual step") {
  LagrangeState s{Vec{1.0}, 0.1, Vec{10.0}, {}};
  s = lagrange_update(s, Vec{14.0});
  CHECK(s.lambda[0] == doctest::Approx(1.4).epsilon(1e-15));
  CHECK(s.history.size() == 1);
  CHECK(s.history[0].first == Vec{1.0});
  CHECK(s.history[0].second == Vec{14.0});
  s = lagrange_update(s, Vec{10.0});
  CHECK(s.lambda[0] == doctest::Approx(1.4).epsilon(1e-15));
  LagrangeState low{Vec{0.05}, 0.1, Vec{10.0}, {}};
  CHECK(lagrange_update(low, Vec{9.0}).lambda[0] == 0.0);
  CHECK_THROWS(lagrange_update(low, Vec{-1.0}));
  CHECK_THROWS(lagrange_update(low, Vec{1.0, 2.0}));

  // Overspending at every iteration never lowers lambda.
  Rng rng(6);
  std::uniform_real_distribution<double> over(10.0, 20.0);
  LagrangeState w{Vec{0.0, 0.3}, 0.05, Vec{10.0, 10.0}, {}};
  for (int k = 0; k < 50; ++k) {
    const Vec before = w.lambda;
    w = lagrange_update(w, Vec{over(rng), over(rng)});
    for (int i = 0; i < 2; ++i) CHECK(w.lambda[i] >= before[i]);
  }
  CHECK(w.history.size() == 50);
}

TEST_CASE("offline consumption estimator") {
  const data::Dataset d = small_dataset(30, 20, 3);
  Rng rng(1);
  const TrajectoryActionFn zero = [&](const Matrix& s, std::size_t, Rng&) {
    return Matrix::Zero(d.layout.action_dim(), s.cols()).eval();
  };
  CHECK(estimate_consumption(d, zero, 10, rng)[0] == 0.0);
  const TrajectoryActionFn replay = [&](const Matrix&, std::size_t ep, Rng&) {
    return trajectory_actions(d, ep);
  };
  // All trajectories: the logged mean exactly.
  CHECK(estimate_consumption(d, replay, 30, rng)[0] ==
        doctest::Approx(d.header.summary.consumption.mean).epsilon(1e-12));
  // A subset: within three standard errors of the dataset mean.
  const double se = d.header.summary.consumption.std / std::sqrt(10.0);
  for (int k = 0; k < 5; ++k) {
    CHECK(std::abs(estimate_consumption(d, replay, 10, rng)[0] - d.header.summary.consumption.mean) <= 3 * se);
  }
  Rng a(4), b(4);
  CHECK(estimate_consumption(d, replay, 10, a) == estimate_consumption(d, replay, 10, b));
  CHECK_THROWS_AS(estimate_consumption(d, replay, 0, rng), std::invalid_argument);
  CHECK_THROWS_AS(estimate_consumption(d, replay, 31, rng), std::invalid_argument);
}

TEST_CASE("training loop: one outer iteration") {
  const data::Dataset d = small_dataset(12, 20, 8);
  TrainConfig c = tiny_config();
  c.lagrange.outer_iters = 1;
  const TrainResult r = train(d, c);
  REQUIRE(r.history.size() == 1);
  CHECK(r.history[0].lambda == Vec{c.lagrange.lambda0});
  CHECK(r.models.bc->hash() == r.history[0].bc_hash);
  CHECK(r.bc_losses.size() == static_cast<std::size_t>(c.bc.steps));
  CHECK(std::isfinite(r.history[0].critic_loss));
  CHECK(r.history[0].e_hat[0] >= 0.0);
  const double expect = std::max(0.0, c.lagrange.lambda0 - c.lagrange.step * (d.config.total_budget() - r.history[0].e_hat[0]));
  CHECK(r.lagrange.lambda[0] == doctest::Approx(expect).epsilon(1e-15));
}

TEST_CASE("training loop: behaviour model trained once, multiplier follows the sign of the gap") {
  const data::Dataset d = small_dataset(12, 20, 9);
  TrainConfig c = tiny_config();
  std::vector<std::uint64_t> hashes;
  const TrainResult r = train(d, c, nullptr, 0.5, [&](const IterationRecord& rec) { hashes.push_back(rec.bc_hash); });
  REQUIRE(r.history.size() == 3);
  CHECK(hashes.size() == 3);
  for (const auto& rec : r.history) {
    CHECK(rec.bc_hash == r.models.bc->hash());
    CHECK(rec.e_hat[0] > 0.5);
    CHECK(rec.lambda_next[0] >= rec.lambda[0]);
  }
  for (std::size_t k = 1; k < r.history.size(); ++k) CHECK(r.history[k].lambda == r.history[k - 1].lambda_next);
  // Same seed, same run.
  const TrainResult again = train(d, c, nullptr, 0.5);
  CHECK(again.models.bc->hash() == r.models.bc->hash());
  CHECK(again.lagrange.lambda == r.lagrange.lambda);
}

TEST_CASE("training loop: decomposed mode") {
  const data::Dataset d = small_dataset(10, 15, 10);
  TrainConfig c = tiny_config();
  c.mode = StateMode::Decomposed;
  c.lagrange.outer_iters = 2;
  const TrainResult r = train(d, c);
  const UserView v = UserView::from(d.layout);
  CHECK(r.models.bc->state_dim() == static_cast<int>(v.state_dim()));
  CHECK(r.models.bc->action_dim() == static_cast<int>(v.action_dim()));
  SocdPolicy p(d.layout, r.models, c.selection);
  Rng rng(1);
  const Vec a = p.act(d.at(0, 0).state, rng);
  CHECK(a.size() == d.layout.action_dim());
  for (double x : a) {
    CHECK(x >= 0.0);
    CHECK(x <= d.layout.v_max);
  }
}

TEST_CASE("batched readout matches per-state readout in chunked form") {
  const data::Dataset d = small_dataset(4, 10, 2);
  TrainConfig c = tiny_config();
  c.lagrange.outer_iters = 1;
  const TrainResult r = train(d, c);
  const Matrix states = trajectory_states(d, 0);
  Rng a(3), b(3);
  const Matrix wide = select_actions(d.layout, r.models, states, c.selection, a);
  const Matrix narrow = select_actions(d.layout, r.models, states, c.selection, b, c.selection.samples);
  CHECK(wide.cols() == states.cols());
  CHECK((wide - narrow).cwiseAbs().maxCoeff() <= 1e-12);
}
