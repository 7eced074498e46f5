#include "socd/core/bundle.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

namespace socd::core {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string join(const Vec& v) {
  std::ostringstream ss;
  ss.precision(17);
  for (std::size_t k = 0; k < v.size(); ++k) ss << (k ? ";" : "") << v[k];
  return ss.str();
}

json base_manifest(const TrainConfig& config, const data::Dataset& data, const std::string& data_path,
                   const diffusion::ScoreModel& bc) {
  return {{"format", "socd-run/1"},
          {"train", config.to_json()},
          {"env", data.header.config},
          {"config_hash", data.header.config_hash},
          {"dataset", {{"path", data_path}, {"J", data.header.J}, {"T", data.header.T}, {"seed", data.header.seed},
                       {"summary", data.header.summary.to_json()}}},
          {"seeds", {{"master", config.seed},
                     {"bc", derive_seed(config.seed, "bc")}}},
          {"bc_hash", hex64(bc.hash())}};
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write '" + p.string() + "'");
  out << text;
}

}  // namespace

std::string lambda_history_csv(const std::vector<IterationRecord>& history) {
  std::ostringstream ss;
  ss << "iteration,lambda,e_hat,lambda_next,bc_hash,critic_loss\n";
  ss.precision(17);
  for (const auto& r : history) {
    ss << r.iteration << ',' << join(r.lambda) << ',' << join(r.e_hat) << ',' << join(r.lambda_next) << ','
       << hex64(r.bc_hash) << ',' << r.critic_loss << '\n';
  }
  return ss.str();
}

void save_bundle(const std::string& dir, const TrainResult& result, const TrainConfig& config,
                 const data::Dataset& data, const std::string& data_path) {
  fs::create_directories(dir);
  nn::write_checkpoint((fs::path(dir) / "bc.ckpt").string(), result.models.bc->to_checkpoint());
  if (result.models.critic) {
    nn::write_checkpoint((fs::path(dir) / "critic.ckpt").string(), result.models.critic->to_checkpoint());
  }
  write_text(fs::path(dir) / "lambda_history.csv", lambda_history_csv(result.history));
  json m = base_manifest(config, data, data_path, *result.models.bc);
  m["kind"] = "socd";
  m["lambda"] = result.lagrange.lambda;
  m["budget"] = result.lagrange.budget;
  json seeds = json::array();
  for (int k = 0; k < config.lagrange.outer_iters; ++k) {
    seeds.push_back({{"critic", derive_seed(config.seed, "critic", k)},
                     {"estimate", derive_seed(config.seed, "estimate", k)}});
  }
  m["seeds"]["iterations"] = seeds;
  write_text(fs::path(dir) / "manifest.json", m.dump(2) + "\n");
}

void save_bc_only(const std::string& dir, const diffusion::ScoreModel& bc, const TrainConfig& config,
                  const data::Dataset& data, const std::string& data_path) {
  fs::create_directories(dir);
  nn::write_checkpoint((fs::path(dir) / "bc.ckpt").string(), bc.to_checkpoint());
  json m = base_manifest(config, data, data_path, bc);
  m["kind"] = "bc";
  write_text(fs::path(dir) / "manifest.json", m.dump(2) + "\n");
}

Bundle load_bundle(const std::string& dir) {
  const fs::path manifest = fs::path(dir) / "manifest.json";
  std::ifstream in(manifest);
  if (!in) throw DataFormatError("missing run manifest '" + manifest.string() + "'");
  Bundle b;
  try {
    b.manifest = json::parse(in);
    const TrainConfig cfg = TrainConfig::from_json(b.manifest.at("train"));
    b.models.mode = cfg.mode;
    b.selection = cfg.selection;
    b.lambda = b.manifest.value("lambda", Vec{});
  } catch (const json::exception& e) {
    throw DataFormatError(std::string("run manifest: ") + e.what());
  }
  b.models.bc = load_bc(dir);
  const fs::path critic = fs::path(dir) / "critic.ckpt";
  if (fs::exists(critic)) {
    b.models.critic = std::make_shared<critic::CriticPair>(
        critic::CriticPair::from_checkpoint(nn::read_checkpoint(critic.string())));
  }
  return b;
}

std::shared_ptr<diffusion::ScoreModel> load_bc(const std::string& path_or_dir) {
  fs::path p(path_or_dir);
  if (fs::is_directory(p)) p /= "bc.ckpt";
  if (!fs::exists(p)) throw DataFormatError("missing BC checkpoint '" + p.string() + "'");
  return std::make_shared<diffusion::ScoreModel>(diffusion::ScoreModel::from_checkpoint(nn::read_checkpoint(p.string())));
}

}  // namespace socd::core
