#include "socd/eval/evaluate.hpp"

#include <algorithm>
#include <stdexcept>

#include "socd/env/environment.hpp"

namespace socd::eval {

using nlohmann::json;

void EvalConfig::validate() const {
  if (rounds < 1) throw ConfigError("eval.rounds must be >= 1");
  if (slots < 1) throw ConfigError("eval.slots must be >= 1");
}

json EvalConfig::to_json() const { return {{"rounds", rounds}, {"slots", slots}}; }

EvalConfig EvalConfig::from_json(const json& j) {
  EvalConfig c = j.value("scale", std::string("desk")) == "paper" ? paper_scale() : EvalConfig{};
  try {
    c.rounds = j.value("rounds", c.rounds);
    c.slots = j.value("slots", c.slots);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("eval: ") + e.what());
  }
  c.validate();
  return c;
}

json EvalReport::to_json() const {
  json rounds_j = json::array();
  for (const auto& r : per_round) {
    rounds_j.push_back({{"env_seed", r.env_seed},
                        {"policy_seed", r.policy_seed},
                        {"throughput", r.throughput},
                        {"consumption", r.consumption},
                        {"max_slot_E", r.max_slot_E},
                        {"clipped", r.clipped},
                        {"budget_violations", r.budget_violations}});
  }
  return {{"policy", policy},
          {"rounds", rounds},
          {"slots", slots},
          {"throughput_mean", throughput.mean},
          {"throughput_std", throughput.std},
          {"consumption_mean", consumption.mean},
          {"consumption_std", consumption.std},
          {"clipped", clipped},
          {"budget_violations", budget_violations},
          {"max_slot_E", max_slot_E},
          {"budgets", budgets},
          {"config_hash", config_hash},
          {"seed", seed},
          {"diagnostics", diagnostics},
          {"per_round", rounds_j}};
}

EvalReport evaluate(policy::Policy& policy, const env::AnyEnvConfig& config, const EvalConfig& eval,
                    std::uint64_t seed) {
  eval.validate();
  env::AnyEnvConfig cfg = config;
  cfg.base().episode_len = eval.slots;
  cfg.validate();
  auto env = env::make_environment(cfg);

  EvalReport rep;
  rep.policy = policy.id();
  rep.rounds = eval.rounds;
  rep.slots = eval.slots;
  rep.budgets = cfg.node_budgets();
  rep.config_hash = env::config_hash(config);
  rep.seed = seed;
  Vec d_rounds, e_rounds;
  for (int r = 0; r < eval.rounds; ++r) {
    RoundStats rs;
    rs.env_seed = derive_seed(seed, "eval-env", static_cast<std::uint64_t>(r));
    rs.policy_seed = derive_seed(seed, "eval-policy", static_cast<std::uint64_t>(r));
    Rng prng(rs.policy_seed);
    Vec obs = env->reset(rs.env_seed);
    double sd = 0.0, se = 0.0;
    while (!env->done()) {
      const Vec a = policy.act(obs, prng);
      if (a.size() != env->layout().action_dim()) {
        throw std::invalid_argument("evaluate: policy action size does not match the environment");
      }
      env::StepOutcome out = env->step(a);
      sd += out.throughput_D;
      se += out.resource_E;
      rs.max_slot_E = std::max(rs.max_slot_E, out.resource_E);
      bool violated = false;
      for (std::size_t k = 0; k < out.node_resource.size(); ++k) {
        if (out.node_resource[k] > rep.budgets[k] + 1e-9) violated = true;
      }
      if (violated) ++rs.budget_violations;
      obs = std::move(out.next_obs);
    }
    rs.clipped = env->clip_count();
    rs.throughput = sd / eval.slots;
    rs.consumption = se / eval.slots;
    d_rounds.push_back(rs.throughput);
    e_rounds.push_back(rs.consumption);
    rep.clipped += rs.clipped;
    rep.budget_violations += rs.budget_violations;
    rep.max_slot_E = std::max(rep.max_slot_E, rs.max_slot_E);
    rep.per_round.push_back(rs);
  }
  rep.throughput = mean_std(d_rounds);
  rep.consumption = mean_std(e_rounds);
  rep.diagnostics = policy.diagnostics();
  return rep;
}

}  // namespace socd::eval
