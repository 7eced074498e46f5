#include "socd/data/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "socd/env/environment.hpp"

namespace socd::data {

using nlohmann::json;

double Transition::total_E() const { return std::accumulate(resource_E.begin(), resource_E.end(), 0.0); }

json DatasetSummary::to_json() const {
  return {{"throughput_mean", throughput.mean},
          {"throughput_std", throughput.std},
          {"consumption_mean", consumption.mean},
          {"consumption_std", consumption.std}};
}

DatasetSummary DatasetSummary::from_json(const json& j) {
  DatasetSummary s;
  s.throughput = {j.at("throughput_mean").get<double>(), j.at("throughput_std").get<double>()};
  s.consumption = {j.at("consumption_mean").get<double>(), j.at("consumption_std").get<double>()};
  return s;
}

json DatasetHeader::to_json() const {
  return {{"format", format}, {"config", config}, {"config_hash", config_hash},
          {"layout", layout}, {"J", J},           {"T", T},
          {"behavior", behavior}, {"seed", seed}, {"summary", summary.to_json()}};
}

DatasetHeader DatasetHeader::from_json(const json& j) {
  DatasetHeader h;
  h.format = j.at("format").get<std::string>();
  h.config = j.at("config");
  h.config_hash = j.at("config_hash").get<std::string>();
  h.layout = j.at("layout");
  h.J = j.at("J").get<int>();
  h.T = j.at("T").get<int>();
  h.behavior = j.at("behavior");
  h.seed = j.at("seed").get<std::uint64_t>();
  h.summary = DatasetSummary::from_json(j.at("summary"));
  return h;
}

json layout_descriptor(const env::ObsLayout& layout) {
  return {{"kind", layout.num_hops > 1 || layout.num_nodes > 1 ? "multi-hop" : "single-hop"},
          {"num_users", layout.num_users},
          {"num_nodes", layout.num_nodes},
          {"num_hops", layout.num_hops},
          {"has_channels", layout.has_channels},
          {"obs_dim", layout.obs_dim()},
          {"action_dim", layout.action_dim()}};
}

std::size_t Dataset::num_transitions() const {
  std::size_t n = 0;
  for (const auto& tr : trajectories) n += tr.steps.size();
  return n;
}

DatasetSummary summarize(const std::vector<Trajectory>& trajectories) {
  Vec d, e;
  for (const auto& traj : trajectories) {
    if (traj.steps.empty()) continue;
    double sd = 0.0, se = 0.0;
    for (const auto& tr : traj.steps) {
      sd += tr.throughput_D;
      se += tr.total_E();
    }
    d.push_back(sd / static_cast<double>(traj.steps.size()));
    e.push_back(se / static_cast<double>(traj.steps.size()));
  }
  if (d.empty()) return {};
  return {mean_std(d), mean_std(e)};
}

Dataset generate(const env::AnyEnvConfig& config, const policy::NoisyEdfParams& behavior, int J,
                 std::uint64_t seed) {
  config.validate();
  if (J < 0) throw std::invalid_argument("generate: J must be nonnegative");
  Dataset ds;
  ds.config = config;
  ds.layout = env::ObsLayout::from(config);
  const int T = config.base().episode_len;
  auto env = env::make_environment(config);
  for (int j = 0; j < J; ++j) {
    Rng prng(derive_seed(seed, "behavior", static_cast<std::uint64_t>(j)));
    Trajectory traj;
    traj.steps.reserve(T);
    Vec obs = env->reset(derive_seed(seed, "episode", static_cast<std::uint64_t>(j)));
    while (!env->done()) {
      Transition tr;
      tr.state = obs;
      tr.action = policy::noisy_edf_action(ds.layout, obs, behavior, prng);
      env::StepOutcome out = env->step(tr.action);
      tr.throughput_D = out.throughput_D;
      tr.resource_E = out.node_resource;
      tr.served = out.served;
      tr.terminal = env->done();
      obs = std::move(out.next_obs);
      tr.next_state = obs;
      traj.steps.push_back(std::move(tr));
    }
    ds.trajectories.push_back(std::move(traj));
  }
  DatasetHeader& h = ds.header;
  h.config = env::to_json(config);
  h.config_hash = env::config_hash(config);
  h.layout = layout_descriptor(ds.layout);
  h.J = J;
  h.T = T;
  h.behavior = behavior.to_json();
  h.seed = seed;
  h.summary = summarize(ds.trajectories);
  return ds;
}

void check_lambda(std::span<const double> lambda) {
  if (lambda.empty()) throw std::domain_error("lambda must have at least one entry");
  for (double l : lambda) {
    if (!(l >= 0.0) || !std::isfinite(l)) throw std::domain_error("lambda must be finite and nonnegative");
  }
}

double relabel_reward(const Transition& tr, std::span<const double> lambda) {
  check_lambda(lambda);
  if (lambda.size() == 1) return tr.throughput_D - lambda[0] * tr.total_E();
  if (lambda.size() != tr.resource_E.size()) {
    throw std::invalid_argument("relabel: lambda needs one entry or one per node");
  }
  double r = tr.throughput_D;
  for (std::size_t k = 0; k < lambda.size(); ++k) r -= lambda[k] * tr.resource_E[k];
  return r;
}

RewardView::RewardView(const Dataset& data, Vec lambda) : data_(&data), lambda_(std::move(lambda)) {
  check_lambda(lambda_);
  if (lambda_.size() != 1 && lambda_.size() != static_cast<std::size_t>(data.layout.num_nodes)) {
    throw std::invalid_argument("RewardView: lambda needs one entry or one per node");
  }
}

double RewardView::reward(std::size_t ep, std::size_t t) const {
  return relabel_reward(data_->at(ep, t), lambda_);
}

Vec RewardView::episode_rewards(std::size_t ep) const {
  const auto& steps = data_->trajectories.at(ep).steps;
  Vec r(steps.size());
  for (std::size_t t = 0; t < steps.size(); ++t) r[t] = relabel_reward(steps[t], lambda_);
  return r;
}

std::vector<PairIndex> sample_pairs(const Dataset& data, std::size_t batch, Rng& rng) {
  // Slot counts are uniform (T per episode), so a flat index decodes directly.
  const std::size_t T = data.trajectories.empty() ? 0 : data.trajectories.front().steps.size();
  const std::size_t total = data.num_transitions();
  if (batch > total) throw std::invalid_argument("sample_pairs: batch larger than dataset");
  std::vector<std::size_t> all(total), flat(batch);
  std::iota(all.begin(), all.end(), std::size_t{0});
  std::sample(all.begin(), all.end(), flat.begin(), batch, rng);
  std::shuffle(flat.begin(), flat.end(), rng);
  std::vector<PairIndex> out;
  out.reserve(batch);
  for (std::size_t f : flat) out.emplace_back(f / T, f % T);
  return out;
}

std::vector<PairIndex> sample_pairs(const Dataset& data, std::size_t batch, std::uint64_t seed) {
  Rng rng(seed);
  return sample_pairs(data, batch, rng);
}

std::vector<std::size_t> sample_trajectories(const Dataset& data, std::size_t batch, Rng& rng) {
  const std::size_t J = data.num_trajectories();
  if (batch > J) throw std::invalid_argument("sample_trajectories: batch larger than dataset");
  std::vector<std::size_t> all(J), out(batch);
  std::iota(all.begin(), all.end(), std::size_t{0});
  std::sample(all.begin(), all.end(), out.begin(), batch, rng);
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

std::vector<std::size_t> sample_trajectories(const Dataset& data, std::size_t batch,
                                             std::uint64_t seed) {
  Rng rng(seed);
  return sample_trajectories(data, batch, rng);
}

}  // namespace socd::data
