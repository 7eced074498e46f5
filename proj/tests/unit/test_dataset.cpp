#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "socd/data/dataset.hpp"
#include "socd/env/environment.hpp"

using namespace socd;
using namespace socd::data;
namespace fs = std::filesystem;

namespace {

env::AnyEnvConfig one_hop(int episode_len = 100) {
  env::AnyEnvConfig c;
  c.single = env::preset_single("poisson-1hop");
  c.single.episode_len = episode_len;
  return c;
}

env::AnyEnvConfig two_hop(int episode_len) {
  env::AnyEnvConfig c;
  c.multihop = env::preset_multihop("poisson-2hop");
  c.multihop->base.episode_len = episode_len;
  return c;
}

policy::NoisyEdfParams behaviour(const env::AnyEnvConfig& c) {
  policy::NoisyEdfParams p;
  p.budgets = c.node_budgets();
  return p;
}

Dataset make(const env::AnyEnvConfig& c, int J, std::uint64_t seed) {
  return generate(c, behaviour(c), J, seed);
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("socd-dataset-" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << bytes;
}

void check_same(const Dataset& a, const Dataset& b) {
  CHECK(a.trajectories == b.trajectories);
  CHECK(a.header.to_json() == b.header.to_json());
  CHECK(env::config_hash(a.config) == env::config_hash(b.config));
  CHECK(layout_descriptor(a.layout) == layout_descriptor(b.layout));
}

}  // namespace

TEST_CASE("generation shape and determinism") {
  const auto cfg = one_hop();
  const Dataset a = make(cfg, 100, 7);
  const Dataset b = make(cfg, 100, 7);
  CHECK(a.num_trajectories() == 100);
  CHECK(a.num_transitions() == 100 * 100);
  CHECK(a.header.J == 100);
  CHECK(a.header.T == 100);
  CHECK(a.header.seed == 7);
  CHECK(a.header.config_hash == env::config_hash(cfg));
  CHECK(a.header.behavior.at("kind") == "noisy-edf");
  CHECK(a.trajectories == b.trajectories);
  CHECK(make(cfg, 3, 8).trajectories != make(cfg, 3, 7).trajectories);
  for (const auto& traj : a.trajectories) {
    CHECK(traj.steps.size() == 100);
    for (std::size_t t = 0; t < traj.steps.size(); ++t) {
      const Transition& tr = traj.steps[t];
      CHECK(tr.state.size() == a.layout.obs_dim());
      CHECK(tr.action.size() == a.layout.action_dim());
      CHECK(tr.throughput_D >= 0.0);
      CHECK(tr.total_E() >= 0.0);
      CHECK(tr.terminal == (t + 1 == traj.steps.size()));
      if (t + 1 < traj.steps.size()) CHECK(traj.steps[t + 1].state == tr.next_state);
    }
  }
}

TEST_CASE("logged episodes replay exactly in the environment") {
  for (const auto& cfg : {one_hop(30), two_hop(30)}) {
    const Dataset d = make(cfg, 4, 19);
    for (std::size_t ep = 0; ep < 4; ++ep) {
      auto e = env::make_environment(cfg);
      Vec obs = e->reset(derive_seed(19, "episode", ep));
      for (const Transition& tr : d.trajectories[ep].steps) {
        CHECK(obs == tr.state);
        const env::StepOutcome out = e->step(tr.action);
        CHECK(out.throughput_D == tr.throughput_D);
        CHECK(out.node_resource == tr.resource_E);
        CHECK(out.served == tr.served);
        obs = out.next_obs;
      }
    }
  }
}

TEST_CASE("zero episodes still carry a valid header") {
  TempDir dir;
  const Dataset d = make(one_hop(), 0, 1);
  CHECK(d.num_transitions() == 0);
  CHECK(d.header.J == 0);
  CHECK(d.header.config_hash == env::config_hash(one_hop()));
  for (const std::string name : {"empty.jsonl", "empty.bin"}) {
    write_dataset(d, dir.file(name));
    check_same(read_dataset(dir.file(name)), d);
  }
}

TEST_CASE("header summary equals recomputation from the body") {
  const Dataset d = make(one_hop(), 40, 3);
  Vec dm, em;
  for (const auto& traj : d.trajectories) {
    double sd = 0.0, se = 0.0;
    for (const auto& tr : traj.steps) {
      sd += tr.throughput_D;
      for (double e : tr.resource_E) se += e;
    }
    dm.push_back(sd / traj.steps.size());
    em.push_back(se / traj.steps.size());
  }
  auto pop = [](const Vec& v) {
    double m = 0.0;
    for (double x : v) m += x;
    m /= v.size();
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::make_pair(m, std::sqrt(s / v.size()));
  };
  const auto [d_mean, d_std] = pop(dm);
  const auto [e_mean, e_std] = pop(em);
  CHECK(d.header.summary.throughput.mean == doctest::Approx(d_mean).epsilon(1e-12));
  CHECK(d.header.summary.throughput.std == doctest::Approx(d_std).epsilon(1e-10));
  CHECK(d.header.summary.consumption.mean == doctest::Approx(e_mean).epsilon(1e-12));
  CHECK(d.header.summary.consumption.std == doctest::Approx(e_std).epsilon(1e-10));
}

TEST_CASE("reward relabelling") {
  Transition tr;
  tr.throughput_D = 12.0;
  tr.resource_E = {14.0};
  CHECK(relabel_reward(tr, Vec{1.0}) == -2.0);
  CHECK(relabel_reward(tr, Vec{0.0}) == 12.0);
  Transition mh;
  mh.throughput_D = 5.0;
  mh.resource_E = {2.0, 3.0};
  CHECK(relabel_reward(mh, Vec{0.5, 1.0}) == 1.0);
  CHECK(relabel_reward(mh, Vec{1.0}) == 0.0);  // scalar prices the total
  CHECK_THROWS_AS(relabel_reward(tr, Vec{-0.1}), std::domain_error);
  CHECK_THROWS_AS(relabel_reward(mh, Vec{0.1, -1.0}), std::domain_error);
  CHECK_THROWS_AS(relabel_reward(tr, Vec{std::nan("")}), std::domain_error);
  CHECK_THROWS(relabel_reward(mh, Vec{0.1, 0.2, 0.3}));
}

TEST_CASE("relabelling is affine in lambda and leaves the data untouched") {
  for (const auto& cfg : {one_hop(50), two_hop(50)}) {
    const Dataset d = make(cfg, 5, 2);
    const Dataset copy = d;
    Rng rng(4);
    std::uniform_real_distribution<double> u(0.0, 3.0);
    const std::size_t k = d.layout.num_nodes;
    for (int trial = 0; trial < 20; ++trial) {
      Vec l1(k), l2(k), sum(k);
      for (std::size_t i = 0; i < k; ++i) {
        l1[i] = u(rng);
        l2[i] = u(rng);
        sum[i] = l1[i] + l2[i];
      }
      const RewardView r1(d, l1), r2(d, l2), r0(d, Vec(k, 0.0)), r12(d, sum);
      for (std::size_t ep = 0; ep < 5; ++ep) {
        const Vec a = r1.episode_rewards(ep), b = r2.episode_rewards(ep), z = r0.episode_rewards(ep),
                  s = r12.episode_rewards(ep);
        for (std::size_t t = 0; t < a.size(); ++t) {
          CHECK(std::abs(a[t] + b[t] - z[t] - s[t]) <= 1e-12 * std::max(1.0, std::abs(s[t])));
          CHECK(a[t] == r1.reward(ep, t));
        }
      }
    }
    CHECK(d.trajectories == copy.trajectories);
    CHECK_THROWS_AS(RewardView(d, Vec(k, -1.0)), std::domain_error);
  }
}

TEST_CASE("pair sampling") {
  const Dataset d = make(one_hop(20), 10, 5);
  const auto all = sample_pairs(d, 200, 9);
  CHECK(all.size() == 200);
  CHECK(std::set<PairIndex>(all.begin(), all.end()).size() == 200);
  const auto one = sample_pairs(d, 1, 9);
  CHECK(one.size() == 1);
  CHECK(one[0].first < 10);
  CHECK(one[0].second < 20);
  CHECK(sample_pairs(d, 50, 9) == sample_pairs(d, 50, 9));
  CHECK(sample_pairs(d, 50, 9) != sample_pairs(d, 50, 10));
  const auto batch = sample_pairs(d, 60, 3);
  CHECK(std::set<PairIndex>(batch.begin(), batch.end()).size() == 60);
  CHECK_THROWS_AS(sample_pairs(d, 201, 9), std::invalid_argument);
}

TEST_CASE("trajectory sampling") {
  const Dataset d = make(one_hop(5), 60, 5);
  const auto fifty = sample_trajectories(d, 50, 1);
  CHECK(fifty.size() == 50);
  CHECK(std::set<std::size_t>(fifty.begin(), fifty.end()).size() == 50);
  const auto full = sample_trajectories(d, 60, 1);
  std::vector<std::size_t> sorted = full;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < 60; ++i) CHECK(sorted[i] == i);
  CHECK(full != sorted);
  CHECK(sample_trajectories(d, 50, 1) == fifty);
  CHECK_THROWS_AS(sample_trajectories(d, 61, 1), std::invalid_argument);
}

TEST_CASE("round trips are bit exact") {
  TempDir dir;
  for (const auto& cfg : {one_hop(25), two_hop(25)}) {
    const Dataset d = make(cfg, 6, 11);
    write_jsonl(d, dir.file("d.jsonl"));
    write_binary(d, dir.file("d.bin"));
    const Dataset t = read_jsonl(dir.file("d.jsonl"));
    const Dataset b = read_binary(dir.file("d.bin"));
    check_same(t, d);
    check_same(b, d);
    check_same(read_dataset(dir.file("d.bin")), d);
    check_same(read_dataset(dir.file("d.jsonl")), d);
    // Writing what was read reproduces the file byte for byte.
    write_jsonl(t, dir.file("again.jsonl"));
    CHECK(slurp(dir.file("again.jsonl")) == slurp(dir.file("d.jsonl")));
  }
}

TEST_CASE("corrupted files are rejected") {
  TempDir dir;
  const Dataset d = make(one_hop(10), 3, 4);
  write_jsonl(d, dir.file("d.jsonl"));
  write_binary(d, dir.file("d.bin"));
  const std::string text = slurp(dir.file("d.jsonl"));
  const std::string bin = slurp(dir.file("d.bin"));

  auto expect_bad_text = [&](const std::string& bytes) {
    spit(dir.file("bad.jsonl"), bytes);
    CHECK_THROWS_AS(read_jsonl(dir.file("bad.jsonl")), DataFormatError);
  };
  auto replace_first = [](std::string s, const std::string& from, const std::string& to) {
    const auto pos = s.find(from);
    REQUIRE(pos != std::string::npos);
    return s.replace(pos, from.size(), to);
  };
  expect_bad_text(replace_first(text, kFormatTag, "socd-dataset/9"));
  expect_bad_text(replace_first(text, d.header.config_hash, std::string(d.header.config_hash.size(), '0')));
  // Drop the last transition line.
  const std::string trimmed = text.substr(0, text.rfind('\n', text.size() - 2) + 1);
  expect_bad_text(trimmed);
  expect_bad_text(text + "{\"ep\":0}\n");
  expect_bad_text(replace_first(text, "\"s\":[", "\"s\":[1.0,"));
  expect_bad_text("not json\n");
  expect_bad_text("");

  spit(dir.file("bad.bin"), bin.substr(0, bin.size() - 8));
  CHECK_THROWS_AS(read_binary(dir.file("bad.bin")), DataFormatError);
  std::string magic = bin;
  magic[0] = 'X';
  spit(dir.file("bad.bin"), magic);
  CHECK_THROWS_AS(read_binary(dir.file("bad.bin")), DataFormatError);
  CHECK_THROWS_AS(read_dataset(dir.file("missing.jsonl")), std::exception);
}
