#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "socd/data/dataset.hpp"
#include "socd/eval/evaluate.hpp"

namespace socd::eval {

struct SweepRow {
  std::string policy;
  double budget = 0.0;
  double d_mean = 0.0;
  double d_std = 0.0;
  double e_mean = 0.0;
  double e_std = 0.0;
  std::string status = "ok";
  bool operator==(const SweepRow&) const = default;
};

/// Builds a policy for an environment whose budget has been set to the cell's E_0.
using PolicyFactory = std::function<policy::PolicyPtr(const env::AnyEnvConfig& config)>;

struct SweepSpec {
  std::vector<std::pair<std::string, PolicyFactory>> policies;
  Vec budgets;
  EvalConfig eval;
  std::uint64_t seed = 0;
  /// When set, a "behavior" row per budget reports the dataset header summary.
  std::optional<data::DatasetSummary> behavior;
};

/// Cross product of policies and budgets in (policy, budget) order. Every cell of
/// budget b uses evaluation seed derive_seed(seed, "sweep", b). A failing cell is
/// recorded with status "error: ..." and NaN statistics; the sweep continues.
std::vector<SweepRow> run_sweep(const env::AnyEnvConfig& config, const SweepSpec& spec,
                                const std::function<void(const SweepRow&)>& progress = {});

/// Columns: policy,E_0,D_mean,D_std,E_mean,E_std,status. Reals use 17 significant digits.
std::string sweep_csv(const std::vector<SweepRow>& rows);
void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows);
std::vector<SweepRow> parse_sweep_csv(const std::string& text);
std::vector<SweepRow> read_sweep_csv(const std::string& path);

enum class Metric { Throughput, Consumption };

/// Static line chart of one metric against E_0, one series per policy, with ±std bars.
std::string sweep_svg(const std::vector<SweepRow>& rows, Metric metric);
void write_sweep_svg(const std::string& path, const std::vector<SweepRow>& rows, Metric metric);

}  // namespace socd::eval
