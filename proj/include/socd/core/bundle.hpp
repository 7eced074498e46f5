#pragma once

#include <string>

#include <json.hpp>

#include "socd/core/trainer.hpp"

namespace socd::core {

/// Directory layout of a trained run:
///   bc.ckpt             score model
///   critic.ckpt         final critic pair (absent for a BC-only run)
///   lambda_history.csv  iteration,lambda,e_hat,lambda_next,bc_hash (vectors joined by ';')
///   manifest.json       config, hashes, seeds, final multiplier
struct Bundle {
  SocdModels models;
  SelectionConfig selection;
  Vec lambda;
  nlohmann::json manifest;
};

std::string lambda_history_csv(const std::vector<IterationRecord>& history);

void save_bundle(const std::string& dir, const TrainResult& result, const TrainConfig& config,
                 const data::Dataset& data, const std::string& data_path);
void save_bc_only(const std::string& dir, const diffusion::ScoreModel& bc, const TrainConfig& config,
                  const data::Dataset& data, const std::string& data_path);

/// Throws DataFormatError for missing or malformed files.
Bundle load_bundle(const std::string& dir);
std::shared_ptr<diffusion::ScoreModel> load_bc(const std::string& path_or_dir);

}  // namespace socd::core
