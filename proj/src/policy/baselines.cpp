#include "socd/policy/baselines.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "socd/env/environment.hpp"

namespace socd::policy {

namespace {

void check_obs(const env::ObsLayout& layout, std::span<const double> obs,
               std::span<const double> budgets) {
  if (obs.size() != layout.obs_dim()) throw std::invalid_argument("policy: observation size mismatch");
  if (budgets.size() != static_cast<std::size_t>(layout.num_nodes)) {
    throw std::invalid_argument("policy: one budget per node required");
  }
  for (double b : budgets) {
    if (!(b >= 0.0)) throw std::invalid_argument("policy: budgets must be nonnegative");
  }
}

}  // namespace

Vec jobs_per_node(const env::ObsLayout& layout, std::span<const double> obs) {
  Vec m(layout.num_nodes, 0.0);
  const auto q = layout.queues(obs);
  for (std::size_t c = 0; c < layout.cells.size(); ++c) m[layout.cells[c].node] += q[c];
  return m;
}

Vec uniform_action(const env::ObsLayout& layout, std::span<const double> obs,
                   std::span<const double> budgets, bool* cap_bound) {
  check_obs(layout, obs, budgets);
  const Vec m = jobs_per_node(layout, obs);
  Vec per_job(m.size(), 0.0);
  bool bound = false;
  for (std::size_t k = 0; k < m.size(); ++k) {
    if (m[k] <= 0.0) continue;
    const double share = budgets[k] / m[k];
    if (share >= layout.v_max) bound = true;
    per_job[k] = std::min(share, layout.v_max);
  }
  if (cap_bound) *cap_bound = bound;
  const auto q = layout.queues(obs);
  Vec a(layout.action_dim(), 0.0);
  for (std::size_t c = 0; c < a.size(); ++c) {
    if (q[c] > 0.0) a[c] = per_job[layout.cells[c].node];
  }
  return a;
}

Vec edf_action(const env::ObsLayout& layout, std::span<const double> obs,
               std::span<const double> budgets, double e_max) {
  check_obs(layout, obs, budgets);
  if (!(e_max >= 0.0)) throw std::invalid_argument("edf_action: e_max must be nonnegative");
  const auto q = layout.queues(obs);
  std::vector<std::size_t> order(layout.cells.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    const env::QueueCell& a = layout.cells[x];
    const env::QueueCell& b = layout.cells[y];
    if (a.tau != b.tau) return a.tau < b.tau;
    const double wa = layout.weights[a.user], wb = layout.weights[b.user];
    if (wa != wb) return wa > wb;
    if (a.user != b.user) return a.user < b.user;
    return a.hop < b.hop;
  });
  Vec remaining(budgets.begin(), budgets.end());
  Vec a(layout.action_dim(), 0.0);
  for (std::size_t c : order) {
    const double n = q[c];
    if (n <= 0.0) continue;
    double& left = remaining[layout.cells[c].node];
    if (left <= 0.0) continue;
    if (n * e_max <= left) {
      a[c] = e_max;
      left -= n * e_max;
    } else {
      a[c] = left / n;
      left = 0.0;
    }
  }
  return a;
}

nlohmann::json NoisyEdfParams::to_json() const {
  return {{"kind", "noisy-edf"}, {"budgets", budgets}, {"noise", noise}, {"epsilon", epsilon}};
}

NoisyEdfParams NoisyEdfParams::from_json(const nlohmann::json& j) {
  NoisyEdfParams p;
  p.budgets = j.at("budgets").get<Vec>();
  p.noise = j.value("noise", p.noise);
  p.epsilon = j.value("epsilon", p.epsilon);
  return p;
}

Vec noisy_edf_action(const env::ObsLayout& layout, std::span<const double> obs,
                     const NoisyEdfParams& params, Rng& rng) {
  Vec a(layout.action_dim(), 0.0);
  if (env::detail::draw_uniform(rng) < params.epsilon) {
    for (double& x : a) x = env::detail::draw_uniform(rng) * layout.v_max;
    return a;
  }
  a = edf_action(layout, obs, params.budgets, layout.v_max);
  for (double& x : a) {
    const double u = 2.0 * env::detail::draw_uniform(rng) - 1.0;
    x = std::clamp(x + u * params.noise * layout.v_max, 0.0, layout.v_max);
  }
  return a;
}

UniformPolicy::UniformPolicy(env::ObsLayout layout, Vec budgets)
    : layout_(std::move(layout)), budgets_(std::move(budgets)) {}

Vec UniformPolicy::act(std::span<const double> obs, Rng&) {
  bool bound = false;
  Vec a = uniform_action(layout_, obs, budgets_, &bound);
  ++slots_;
  if (bound) ++cap_bound_;
  return a;
}

nlohmann::json UniformPolicy::diagnostics() const {
  return {{"slots", slots_},
          {"cap_bound_slots", cap_bound_},
          {"cap_bound_fraction", slots_ ? static_cast<double>(cap_bound_) / slots_ : 0.0}};
}

EdfPolicy::EdfPolicy(env::ObsLayout layout, Vec budgets, double e_max)
    : layout_(std::move(layout)), budgets_(std::move(budgets)), e_max_(e_max) {}

Vec EdfPolicy::act(std::span<const double> obs, Rng&) {
  return edf_action(layout_, obs, budgets_, e_max_);
}

NoisyEdfPolicy::NoisyEdfPolicy(env::ObsLayout layout, NoisyEdfParams params)
    : layout_(std::move(layout)), params_(std::move(params)) {}

Vec NoisyEdfPolicy::act(std::span<const double> obs, Rng& rng) {
  return noisy_edf_action(layout_, obs, params_, rng);
}

BcPolicy::BcPolicy(std::shared_ptr<const diffusion::ScoreModel> model, int steps, int samples)
    : model_(std::move(model)), steps_(steps), samples_(samples) {
  if (!model_) throw std::invalid_argument("BcPolicy: null model");
  if (steps_ < 1 || samples_ < 1) throw std::invalid_argument("BcPolicy: steps and samples must be >= 1");
}

Vec BcPolicy::act(std::span<const double> obs, Rng& rng) {
  const nn::Matrix s = diffusion::sample(*model_, obs, samples_, steps_, rng);
  const nn::Vector mean = s.rowwise().mean();
  return Vec(mean.data(), mean.data() + mean.size());
}

}  // namespace socd::policy
