// socd: dataset generation, training, evaluation and sweeps.
//
// Exit codes: 0 success, 2 configuration or usage error, 3 data-format error,
// 1 anything else. SOCD_OUTPUT_DIR, when set, is the base for relative output paths.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "socd/core/bundle.hpp"
#include "socd/core/trainer.hpp"
#include "socd/data/dataset.hpp"
#include "socd/eval/evaluate.hpp"
#include "socd/eval/sweep.hpp"
#include "socd/policy/baselines.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace socd;

namespace {

std::string out_path(const std::string& p) {
  const char* base = std::getenv("SOCD_OUTPUT_DIR");
  if (!base || !*base || fs::path(p).is_absolute()) return p;
  return (fs::path(base) / p).string();
}

void ensure_parent(const std::string& p) {
  const fs::path parent = fs::path(p).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path + "': " + e.what());
  }
}

// Experiment file: {"env": {...}, "multihop": {...}?, "data": {...}?, "train": {...}?,
// "eval": {...}?, "sweep": {...}?}. A bare preset name may stand in for the file.
json load_experiment(const std::string& config, const std::string& preset) {
  if (!config.empty()) return load_json(config);
  if (!preset.empty()) return {{"env", {{"preset", preset}}}};
  throw ConfigError("either --config or --preset is required");
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw ConfigError("bad number '" + item + "' in list");
    }
  }
  return out;
}

std::vector<std::string> split_names(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

core::TrainConfig train_config(const json& exp, std::optional<std::uint64_t> seed) {
  core::TrainConfig c = core::TrainConfig::from_json(exp.value("train", json::object()));
  if (seed) c.seed = *seed;
  return c;
}

void check_dataset_env(const data::Dataset& ds, const env::AnyEnvConfig& cfg) {
  if (data::layout_descriptor(ds.layout) != data::layout_descriptor(env::ObsLayout::from(cfg))) {
    throw ConfigError("dataset layout does not match the configured environment");
  }
}

void print_report(const eval::EvalReport& r) {
  std::cout << r.policy << ": D=" << r.throughput.mean << " +/- " << r.throughput.std
            << "  E=" << r.consumption.mean << " +/- " << r.consumption.std << "  clipped=" << r.clipped
            << "  over-budget slots=" << r.budget_violations << "\n";
}

void write_json(const std::string& path, const json& j) {
  ensure_parent(path);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << j.dump(2) << "\n";
}

policy::PolicyPtr baseline_policy(const std::string& name, const env::AnyEnvConfig& cfg) {
  const env::ObsLayout layout = env::ObsLayout::from(cfg);
  if (name == "uniform") return std::make_unique<policy::UniformPolicy>(layout, cfg.node_budgets());
  if (name == "edf") return std::make_unique<policy::EdfPolicy>(layout, cfg.node_budgets(), layout.v_max);
  if (name == "zero") return std::make_unique<policy::ZeroPolicy>(layout);
  if (name == "noisy-edf") {
    policy::NoisyEdfParams p;
    p.budgets = cfg.node_budgets();
    return std::make_unique<policy::NoisyEdfPolicy>(layout, p);
  }
  throw ConfigError("unknown baseline policy '" + name + "'");
}

int run(int argc, char** argv) {
  CLI::App app{"Offline scheduling with diffusion behaviour cloning and critic guidance"};
  app.require_subcommand(1);

  std::string config, preset, data_path, out, run_dir, bc_path, policy_name = "noisy-edf", budgets_arg,
                                                                policies_arg = "uniform,edf,bc,socd";
  std::uint64_t seed_value = 0;
  int episodes = 200, rounds = 0, slots = 0;
  double noise = 0.3, epsilon = 0.1, budget = -1.0;
  bool plots = false;

  auto add_config = [&](CLI::App* c) {
    c->add_option("--config", config, "experiment JSON file");
    c->add_option("--preset", preset, "environment preset instead of --config");
  };

  auto* gen = app.add_subcommand("gen-data", "roll out the behaviour policy into an offline dataset");
  add_config(gen);
  gen->add_option("--policy", policy_name, "behaviour policy (noisy-edf)");
  gen->add_option("--episodes", episodes, "trajectories J")->check(CLI::NonNegativeNumber);
  auto* gen_seed = gen->add_option("--seed", seed_value, "generation seed");
  gen->add_option("--noise", noise, "per-cell noise half-width in units of v_max");
  gen->add_option("--epsilon", epsilon, "probability of a uniformly random action");
  gen->add_option("--budget", budget, "behaviour per-slot budget (default: config E_0)");
  gen->add_option("--out", out, "output file (.bin for the binary mirror)")->required();

  auto* tbc = app.add_subcommand("train-bc", "fit the diffusion behaviour model only");
  add_config(tbc);
  tbc->add_option("--data", data_path)->required();
  auto* tbc_seed = tbc->add_option("--seed", seed_value);
  tbc->add_option("--out", out, "run directory")->required();

  auto* tr = app.add_subcommand("train", "full training: BC once, then the Lagrange iteration");
  add_config(tr);
  tr->add_option("--data", data_path)->required();
  tr->add_option("--bc", bc_path, "reuse a trained BC checkpoint or run directory");
  tr->add_option("--budget", budget, "per-slot budget E_0 (default: config)");
  auto* tr_seed = tr->add_option("--seed", seed_value);
  tr->add_option("--out", out, "run directory")->required();

  auto* ev = app.add_subcommand("eval", "evaluate a trained run or a baseline in the simulator");
  add_config(ev);
  ev->add_option("--run", run_dir, "trained run directory (SOCD, or BC for a BC-only run)");
  ev->add_option("--policy", policy_name, "socd | bc | uniform | edf | zero | noisy-edf");
  ev->add_option("--budget", budget, "per-slot budget E_0 (default: config)");
  ev->add_option("--rounds", rounds);
  ev->add_option("--slots", slots);
  auto* ev_seed = ev->add_option("--seed", seed_value);
  ev->add_option("--out", out, "report JSON");

  auto* base = app.add_subcommand("baseline", "evaluate a heuristic baseline");
  add_config(base);
  base->add_option("--policy", policy_name, "uniform | edf | zero | noisy-edf")->required();
  base->add_option("--budget", budget);
  base->add_option("--rounds", rounds);
  base->add_option("--slots", slots);
  auto* base_seed = base->add_option("--seed", seed_value);
  base->add_option("--out", out, "report JSON");

  auto* sw = app.add_subcommand("sweep", "policies x budgets table (and optional plots)");
  add_config(sw);
  sw->add_option("--data", data_path, "dataset (required for bc, socd and the behaviour row)");
  sw->add_option("--bc", bc_path, "trained BC checkpoint or run directory (else trained here)");
  sw->add_option("--budgets", budgets_arg, "comma-separated E_0 values");
  sw->add_option("--policies", policies_arg, "comma-separated policy names");
  sw->add_option("--rounds", rounds);
  sw->add_option("--slots", slots);
  auto* sw_seed = sw->add_option("--seed", seed_value);
  sw->add_flag("--plots", plots, "also write SVG plots");
  sw->add_option("--out", out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  auto seed_if = [&](CLI::Option* o) { return o->count() ? std::optional<std::uint64_t>(seed_value) : std::nullopt; };

  if (gen->parsed()) {
    const json exp = load_experiment(config, preset);
    env::AnyEnvConfig cfg = env::any_env_from_json(exp);
    cfg.validate();
    if (policy_name != "noisy-edf") throw ConfigError("only the noisy-edf behaviour policy is available");
    const json dj = exp.value("data", json::object());
    policy::NoisyEdfParams p;
    p.noise = gen->count("--noise") ? noise : dj.value("noise", noise);
    p.epsilon = gen->count("--epsilon") ? epsilon : dj.value("epsilon", epsilon);
    env::AnyEnvConfig behaviour = cfg;
    if (budget >= 0.0) behaviour.set_total_budget(budget);
    else if (dj.contains("budget")) behaviour.set_total_budget(dj.at("budget").get<double>());
    p.budgets = behaviour.node_budgets();
    const int J = gen->count("--episodes") ? episodes : dj.value("episodes", episodes);
    const std::uint64_t seed = seed_if(gen_seed).value_or(dj.value("seed", cfg.base().seed));
    const data::Dataset ds = data::generate(cfg, p, J, seed);
    const std::string path = out_path(out);
    ensure_parent(path);
    data::write_dataset(ds, path);
    std::cout << "wrote " << J << " x " << ds.header.T << " transitions to " << path << "\n"
              << "behaviour D=" << ds.header.summary.throughput.mean << " +/- " << ds.header.summary.throughput.std
              << "  E=" << ds.header.summary.consumption.mean << " +/- " << ds.header.summary.consumption.std << "\n";
    return 0;
  }

  if (tbc->parsed() || tr->parsed()) {
    const data::Dataset ds = data::read_dataset(data_path);
    const json exp = config.empty() && preset.empty() ? ds.header.config : load_experiment(config, preset);
    const env::AnyEnvConfig cfg = env::any_env_from_json(exp);
    check_dataset_env(ds, cfg);
    const core::TrainConfig tc = train_config(exp, seed_if(tbc->parsed() ? tbc_seed : tr_seed));
    const std::string dir = out_path(out);
    if (tbc->parsed()) {
      Rng rng(derive_seed(tc.seed, "bc"));
      std::vector<double> losses;
      const auto bc = core::train_behavior_model(ds, tc, rng, &losses);
      core::save_bc_only(dir, *bc, tc, ds, data_path);
      std::cout << "BC trained for " << losses.size() << " steps; final loss "
                << (losses.empty() ? 0.0 : losses.back()) << "; wrote " << dir << "\n";
      return 0;
    }
    std::shared_ptr<const diffusion::ScoreModel> bc;
    if (!bc_path.empty()) bc = core::load_bc(bc_path);
    std::optional<double> b;
    if (budget >= 0.0) b = budget;
    else if (exp.value("train", json::object()).contains("budget")) b = exp.at("train").at("budget").get<double>();
    const auto result = core::train(ds, tc, bc, b, [](const core::IterationRecord& r) {
      std::cout << "iteration " << r.iteration << ": lambda=" << r.lambda[0] << " E_hat=" << r.e_hat[0]
                << " -> " << r.lambda_next[0] << "  bc=" << hex64(r.bc_hash) << std::endl;
    });
    core::save_bundle(dir, result, tc, ds, data_path);
    std::cout << "wrote " << dir << "\n";
    return 0;
  }

  if (ev->parsed() || base->parsed()) {
    CLI::App* sub = ev->parsed() ? ev : base;
    json exp;
    std::optional<core::Bundle> bundle;
    if (!run_dir.empty()) {
      bundle = core::load_bundle(run_dir);
      exp = config.empty() && preset.empty() ? bundle->manifest.at("env") : load_experiment(config, preset);
    } else {
      exp = load_experiment(config, preset);
    }
    env::AnyEnvConfig cfg = env::any_env_from_json(exp);
    if (budget >= 0.0) cfg.set_total_budget(budget);
    cfg.validate();
    eval::EvalConfig ec = eval::EvalConfig::from_json(exp.value("eval", json::object()));
    if (rounds > 0) ec.rounds = rounds;
    if (slots > 0) ec.slots = slots;
    const std::uint64_t seed = seed_if(ev->parsed() ? ev_seed : base_seed).value_or(cfg.base().seed);
    const env::ObsLayout layout = env::ObsLayout::from(cfg);
    policy::PolicyPtr pol;
    std::string name = policy_name;
    if (bundle && !sub->count("--policy")) name = bundle->models.critic ? "socd" : "bc";
    if (name == "socd") {
      if (!bundle || !bundle->models.critic) throw ConfigError("--policy socd needs --run with a trained critic");
      pol = std::make_unique<core::SocdPolicy>(layout, bundle->models, bundle->selection);
    } else if (name == "bc") {
      if (!bundle) throw ConfigError("--policy bc needs --run");
      if (bundle->models.mode != core::StateMode::Joint) throw ConfigError("BC readout needs a joint-mode model");
      pol = std::make_unique<policy::BcPolicy>(bundle->models.bc, bundle->selection.steps);
    } else {
      pol = baseline_policy(name, cfg);
    }
    const eval::EvalReport rep = eval::evaluate(*pol, cfg, ec, seed);
    print_report(rep);
    if (!out.empty()) write_json(out_path(out), rep.to_json());
    return 0;
  }

  if (sw->parsed()) {
    const json exp = load_experiment(config, preset);
    const env::AnyEnvConfig cfg = env::any_env_from_json(exp);
    cfg.validate();
    const json sj = exp.value("sweep", json::object());
    eval::SweepSpec spec;
    spec.eval = eval::EvalConfig::from_json(exp.value("eval", json::object()));
    if (rounds > 0) spec.eval.rounds = rounds;
    if (slots > 0) spec.eval.slots = slots;
    spec.seed = seed_if(sw_seed).value_or(sj.value("seed", cfg.base().seed));
    spec.budgets = !budgets_arg.empty() ? parse_list(budgets_arg) : sj.value("budgets", Vec{cfg.total_budget()});
    const auto names = sw->count("--policies") || !sj.contains("policies")
                           ? split_names(policies_arg)
                           : sj.at("policies").get<std::vector<std::string>>();
    const core::TrainConfig tc = train_config(exp, seed_if(sw_seed));

    std::optional<data::Dataset> ds;
    if (!data_path.empty()) {
      ds = data::read_dataset(data_path);
      check_dataset_env(*ds, cfg);
      spec.behavior = ds->header.summary;
    }
    std::shared_ptr<const diffusion::ScoreModel> bc;
    auto need_bc = [&]() {
      if (bc) return;
      if (!bc_path.empty()) {
        bc = core::load_bc(bc_path);
        return;
      }
      if (!ds) throw ConfigError("bc and socd need --data or --bc");
      Rng rng(derive_seed(tc.seed, "bc"));
      bc = core::train_behavior_model(*ds, tc, rng);
    };
    for (const auto& n : names) {
      if (n == "bc") {
        spec.policies.emplace_back(n, [&](const env::AnyEnvConfig&) -> policy::PolicyPtr {
          need_bc();
          return std::make_unique<policy::BcPolicy>(bc, tc.selection.steps);
        });
      } else if (n == "socd") {
        spec.policies.emplace_back(n, [&](const env::AnyEnvConfig& cell) -> policy::PolicyPtr {
          if (!ds) throw ConfigError("socd needs --data");
          need_bc();
          const auto result = core::train(*ds, tc, bc, cell.total_budget());
          return std::make_unique<core::SocdPolicy>(env::ObsLayout::from(cell), result.models, tc.selection);
        });
      } else {
        baseline_policy(n, cfg);  // rejects unknown names before any work
        spec.policies.emplace_back(n, [n](const env::AnyEnvConfig& cell) { return baseline_policy(n, cell); });
      }
    }
    const auto rows = eval::run_sweep(cfg, spec, [](const eval::SweepRow& r) {
      std::cout << r.policy << " E_0=" << r.budget << ": D=" << r.d_mean << " E=" << r.e_mean << " [" << r.status
                << "]" << std::endl;
    });
    const std::string dir = out_path(out);
    fs::create_directories(dir);
    eval::write_sweep_csv((fs::path(dir) / "sweep.csv").string(), rows);
    if (plots) {
      eval::write_sweep_svg((fs::path(dir) / "throughput.svg").string(), rows, eval::Metric::Throughput);
      eval::write_sweep_svg((fs::path(dir) / "consumption.svg").string(), rows, eval::Metric::Consumption);
    }
    std::cout << "wrote " << rows.size() << " rows to " << (fs::path(dir) / "sweep.csv").string() << "\n";
    return 0;
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DataFormatError& e) {
    std::cerr << "data format error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
