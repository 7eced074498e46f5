#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "socd/common.hpp"
#include "socd/env/config.hpp"
#include "socd/env/layout.hpp"
#include "socd/policy/baselines.hpp"

namespace socd::data {

inline constexpr const char* kFormatTag = "socd-dataset/1";

/// One logged slot. The reward is not stored; see relabel_reward.
struct Transition {
  Vec state;
  Vec action;
  double throughput_D = 0.0;
  Vec resource_E;           // per node; a single entry for single-hop
  std::vector<int> served;  // per user / flow
  Vec next_state;
  bool terminal = false;

  double total_E() const;
  bool operator==(const Transition&) const = default;
};

struct Trajectory {
  std::vector<Transition> steps;
  bool operator==(const Trajectory&) const = default;
};

/// Population mean and std across episodes of the per-episode mean D(t) and E(t).
struct DatasetSummary {
  MeanStd throughput;
  MeanStd consumption;
  nlohmann::json to_json() const;
  static DatasetSummary from_json(const nlohmann::json& j);
};

struct DatasetHeader {
  std::string format = kFormatTag;
  nlohmann::json config;  // to_json(AnyEnvConfig)
  std::string config_hash;
  nlohmann::json layout;  // descriptor, see layout_descriptor
  int J = 0;
  int T = 0;
  nlohmann::json behavior;
  std::uint64_t seed = 0;
  DatasetSummary summary;
  nlohmann::json to_json() const;
  static DatasetHeader from_json(const nlohmann::json& j);
};

nlohmann::json layout_descriptor(const env::ObsLayout& layout);

struct Dataset {
  DatasetHeader header;
  env::AnyEnvConfig config;
  env::ObsLayout layout;
  std::vector<Trajectory> trajectories;

  std::size_t num_trajectories() const { return trajectories.size(); }
  std::size_t num_transitions() const;
  const Transition& at(std::size_t ep, std::size_t t) const { return trajectories.at(ep).steps.at(t); }
};

DatasetSummary summarize(const std::vector<Trajectory>& trajectories);

/// Rolls out J episodes of config.base().episode_len slots under noisy-EDF.
/// Episode j uses env seed derive_seed(seed, "episode", j) and policy stream
/// derive_seed(seed, "behavior", j).
Dataset generate(const env::AnyEnvConfig& config, const policy::NoisyEdfParams& behavior, int J,
                 std::uint64_t seed);

/// r = D - lambda . E. A one-entry lambda prices total consumption; otherwise one
/// entry per node. Throws std::domain_error on negative or non-finite lambda.
double relabel_reward(const Transition& tr, std::span<const double> lambda);
void check_lambda(std::span<const double> lambda);

/// Lazily relabelled rewards over a dataset; the dataset is not modified.
class RewardView {
 public:
  RewardView(const Dataset& data, Vec lambda);
  double reward(std::size_t ep, std::size_t t) const;
  Vec episode_rewards(std::size_t ep) const;
  const Vec& lambda() const { return lambda_; }

 private:
  const Dataset* data_;
  Vec lambda_;
};

using PairIndex = std::pair<std::size_t, std::size_t>;  // (episode, slot)

/// Uniform sampling without replacement. Throw std::invalid_argument when the
/// batch exceeds the available items.
std::vector<PairIndex> sample_pairs(const Dataset& data, std::size_t batch, Rng& rng);
std::vector<PairIndex> sample_pairs(const Dataset& data, std::size_t batch, std::uint64_t seed);
std::vector<std::size_t> sample_trajectories(const Dataset& data, std::size_t batch, Rng& rng);
std::vector<std::size_t> sample_trajectories(const Dataset& data, std::size_t batch,
                                             std::uint64_t seed);

/// Line-delimited text: a header object line, then one object per transition,
///   {"ep","t","s","a","d","e","u","ns","done"}
/// in episode-major order. Reading verifies the format tag, config hash, counts
/// and vector lengths, and throws DataFormatError on any mismatch.
void write_jsonl(const Dataset& data, const std::string& path);
Dataset read_jsonl(const std::string& path);

/// Binary mirror: magic "SOCDDATA", u32 version, u64 header length, header JSON,
/// then per transition f64 LE fields s, a, d, e, u, ns, done.
void write_binary(const Dataset& data, const std::string& path);
Dataset read_binary(const std::string& path);

/// Dispatches on the file's first bytes.
Dataset read_dataset(const std::string& path);
/// Binary when the path ends in ".bin", text otherwise.
void write_dataset(const Dataset& data, const std::string& path);

}  // namespace socd::data
