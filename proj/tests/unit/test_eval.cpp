#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "socd/data/dataset.hpp"
#include "socd/env/environment.hpp"
#include "socd/eval/evaluate.hpp"
#include "socd/eval/sweep.hpp"
#include "socd/policy/baselines.hpp"

using namespace socd;
using namespace socd::eval;

namespace {

env::AnyEnvConfig one_hop() {
  env::AnyEnvConfig c;
  c.single = env::preset_single("poisson-1hop");
  return c;
}

class ThrowingPolicy final : public policy::Policy {
 public:
  std::string id() const override { return "broken"; }
  Vec act(std::span<const double>, Rng&) override { throw std::runtime_error("no action"); }
};

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

bool same_row(const SweepRow& a, const SweepRow& b) {
  return a.policy == b.policy && same_bits(a.budget, b.budget) && same_bits(a.d_mean, b.d_mean) &&
         same_bits(a.d_std, b.d_std) && same_bits(a.e_mean, b.e_mean) && same_bits(a.e_std, b.e_std) &&
         a.status == b.status;
}

policy::PolicyPtr uniform_for(const env::AnyEnvConfig& c) {
  return std::make_unique<policy::UniformPolicy>(env::ObsLayout::from(c), c.node_budgets());
}

}  // namespace

TEST_CASE("zero policy earns and spends nothing") {
  const auto cfg = one_hop();
  policy::ZeroPolicy zero(env::ObsLayout::from(cfg));
  const EvalReport r = evaluate(zero, cfg, {3, 50}, 1);
  CHECK(r.rounds == 3);
  CHECK(r.slots == 50);
  CHECK(r.throughput.mean == 0.0);
  CHECK(r.consumption.mean == 0.0);
  CHECK(r.budget_violations == 0);
}

TEST_CASE("uniform respects its budget and reports are reproducible") {
  const auto cfg = one_hop();
  auto p = uniform_for(cfg);
  const EvalReport r = evaluate(*p, cfg, {}, 7);
  CHECK(r.consumption.mean <= 10.0 + 1e-9);
  CHECK(r.max_slot_E <= 10.0 + 1e-9);
  CHECK(r.budget_violations == 0);
  CHECK(r.throughput.mean > 0.0);
  auto q = uniform_for(cfg);
  const EvalReport again = evaluate(*q, cfg, {}, 7);
  CHECK(again.to_json().dump() == r.to_json().dump());
  CHECK(r.diagnostics.contains("cap_bound_slots"));
}

TEST_CASE("report aggregates equal recomputation from per-round values") {
  const auto cfg = one_hop();
  policy::NoisyEdfParams np;
  np.budgets = {10.0};
  policy::NoisyEdfPolicy p(env::ObsLayout::from(cfg), np);
  const EvalReport r = evaluate(p, cfg, {6, 40}, 3);
  REQUIRE(r.per_round.size() == 6);
  double dm = 0, em = 0;
  for (const auto& s : r.per_round) {
    dm += s.throughput / 6;
    em += s.consumption / 6;
  }
  double dv = 0, ev = 0;
  for (const auto& s : r.per_round) {
    dv += (s.throughput - dm) * (s.throughput - dm) / 6;
    ev += (s.consumption - em) * (s.consumption - em) / 6;
  }
  CHECK(std::abs(r.throughput.mean - dm) <= 1e-12 * std::max(1.0, dm));
  CHECK(std::abs(r.consumption.mean - em) <= 1e-12 * std::max(1.0, em));
  CHECK(std::abs(r.throughput.std - std::sqrt(dv)) <= 1e-12 * std::max(1.0, dm));
  CHECK(std::abs(r.consumption.std - std::sqrt(ev)) <= 1e-12 * std::max(1.0, em));

  // Replaying round 2 by hand with the recorded seeds reproduces its statistics.
  const RoundStats& s = r.per_round[2];
  CHECK(s.env_seed == derive_seed(3, "eval-env", 2));
  CHECK(s.policy_seed == derive_seed(3, "eval-policy", 2));
  env::AnyEnvConfig c = cfg;
  c.base().episode_len = 40;
  auto e = env::make_environment(c);
  policy::NoisyEdfPolicy fresh(env::ObsLayout::from(cfg), np);
  Rng rng(s.policy_seed);
  Vec obs = e->reset(s.env_seed);
  double d = 0, en = 0;
  int violations = 0;
  for (int t = 0; t < 40; ++t) {
    const auto out = e->step(fresh.act(obs, rng));
    d += out.throughput_D;
    en += out.resource_E;
    violations += out.resource_E > 10.0 + 1e-9;
    obs = out.next_obs;
  }
  CHECK(s.throughput == doctest::Approx(d / 40).epsilon(1e-12));
  CHECK(s.consumption == doctest::Approx(en / 40).epsilon(1e-12));
  CHECK(s.budget_violations == violations);
}

TEST_CASE("layout mismatch and bad settings are rejected") {
  env::AnyEnvConfig mh;
  mh.multihop = env::preset_multihop("poisson-2hop");
  policy::ZeroPolicy wrong(env::ObsLayout::from(one_hop()));
  CHECK_THROWS_AS(evaluate(wrong, mh, {1, 5}, 1), std::invalid_argument);
  CHECK_THROWS_AS(EvalConfig({0, 5}).validate(), ConfigError);
  CHECK_THROWS_AS(EvalConfig({2, 0}).validate(), ConfigError);
}

TEST_CASE("sweep cross product, behaviour rows and error cells") {
  const auto cfg = one_hop();
  SweepSpec spec;
  spec.policies = {
      {"zero", [](const env::AnyEnvConfig& c) { return std::make_unique<policy::ZeroPolicy>(env::ObsLayout::from(c)); }},
      {"uniform", uniform_for},
      {"edf", [](const env::AnyEnvConfig& c) {
         const auto l = env::ObsLayout::from(c);
         return std::make_unique<policy::EdfPolicy>(l, c.node_budgets(), l.v_max);
       }},
      {"noisy-edf", [](const env::AnyEnvConfig& c) {
         policy::NoisyEdfParams p;
         p.budgets = c.node_budgets();
         return std::make_unique<policy::NoisyEdfPolicy>(env::ObsLayout::from(c), p);
       }},
      {"broken", [](const env::AnyEnvConfig&) -> policy::PolicyPtr { return std::make_unique<ThrowingPolicy>(); }},
  };
  spec.budgets = {4, 8, 12, 16};
  spec.eval = {2, 30};
  spec.seed = 11;
  policy::NoisyEdfParams np;
  np.budgets = {10.0};
  auto small = cfg;
  small.base().episode_len = 20;
  const data::Dataset d = data::generate(small, np, 6, 2);
  spec.behavior = d.header.summary;
  int seen = 0;
  const auto rows = run_sweep(cfg, spec, [&](const SweepRow&) { ++seen; });
  CHECK(rows.size() == 24);
  CHECK(seen == 24);
  for (int p = 0; p < 5; ++p) {
    for (int b = 0; b < 4; ++b) {
      const SweepRow& r = rows[p * 4 + b];
      CHECK(r.policy == spec.policies[p].first);
      CHECK(r.budget == spec.budgets[b]);
      if (r.policy == "broken") {
        CHECK(r.status.rfind("error: ", 0) == 0);
        CHECK(std::isnan(r.d_mean));
      } else {
        CHECK(r.status == "ok");
        if (r.policy == "uniform" || r.policy == "edf") CHECK(r.e_mean <= r.budget + 1e-9);
      }
    }
  }
  for (int b = 0; b < 4; ++b) {
    const SweepRow& r = rows[20 + b];
    CHECK(r.policy == "behavior");
    CHECK(r.d_mean == d.header.summary.throughput.mean);
    CHECK(r.d_std == d.header.summary.throughput.std);
    CHECK(r.e_mean == d.header.summary.consumption.mean);
    CHECK(r.e_std == d.header.summary.consumption.std);
  }
  // A cell equals a direct evaluation with the cell's seed.
  auto cell = cfg;
  cell.set_total_budget(8);
  auto u = uniform_for(cell);
  const EvalReport direct = evaluate(*u, cell, spec.eval, derive_seed(11, "sweep", 1));
  CHECK(rows[5].d_mean == direct.throughput.mean);
  CHECK(rows[5].e_mean == direct.consumption.mean);

  // Table round trip, NaN cells and quoted messages included.
  const std::string csv = sweep_csv(rows);
  CHECK(csv.rfind("policy,E_0,D_mean,D_std,E_mean,E_std,status\n", 0) == 0);
  const auto back = parse_sweep_csv(csv);
  REQUIRE(back.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) CHECK(same_row(back[i], rows[i]));
  CHECK(sweep_csv(back) == csv);

  const auto dir = std::filesystem::temp_directory_path() / ("socd-sweep-" + std::to_string(std::random_device{}()));
  std::filesystem::create_directories(dir);
  write_sweep_csv((dir / "t.csv").string(), rows);
  const auto file_rows = read_sweep_csv((dir / "t.csv").string());
  for (std::size_t i = 0; i < rows.size(); ++i) CHECK(same_row(file_rows[i], rows[i]));
  write_sweep_svg((dir / "d.svg").string(), rows, Metric::Throughput);
  std::ifstream svg(dir / "d.svg");
  std::stringstream ss;
  ss << svg.rdbuf();
  CHECK(ss.str().rfind("<svg", 0) == 0);
  CHECK(ss.str().find("uniform") != std::string::npos);
  std::filesystem::remove_all(dir);
}

TEST_CASE("sweep table parser rejects malformed input") {
  CHECK_THROWS_AS(parse_sweep_csv("wrong,header\n"), DataFormatError);
  CHECK_THROWS_AS(parse_sweep_csv("policy,E_0,D_mean,D_std,E_mean,E_std,status\nx,1,2\n"), DataFormatError);
  CHECK_THROWS_AS(parse_sweep_csv("policy,E_0,D_mean,D_std,E_mean,E_std,status\nx,1,a,2,3,4,ok\n"), DataFormatError);
}
