#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "flowddi/augment.hpp"
#include "flowddi/gflownet.hpp"
#include "flowddi/vgae.hpp"

namespace flowddi {

// Parsed pipeline configuration. The file format is flat key = value lines
// under [section] headers; the hyperparameters the method depends on
// (latent_dim, knn_k, alpha, n_synthetic) have no defaults and must be
// written out explicitly.
struct PipelineConfig {
  std::filesystem::path train_path;
  std::filesystem::path valid_path;
  std::filesystem::path test_path;
  std::filesystem::path vocab_path;
  std::filesystem::path out_dir;

  VgaeConfig vgae_pretrain;
  VgaeConfig vgae_final;
  GfnConfig gfn;        // alpha/reward_floor mirrored from [reward]
  RewardConfig reward;
  std::size_t n_synthetic = 0;
  std::size_t coverage_m = 1;
  std::string true_distribution = "uniform";  // "uniform" or "full"
  std::uint64_t seed = 1;

  std::string config_hash;  // FNV-1a of the config file bytes
};

PipelineConfig load_pipeline_config(const std::filesystem::path& path);

// Replaces the global seed; per-stage seeds follow it.
void apply_seed_override(PipelineConfig& cfg, std::uint64_t seed);

void apply_out_override(PipelineConfig& cfg, const std::filesystem::path& out_dir);

// Writes a runnable config pointing at fixture files; used by make-fixture.
void write_config_template(const std::filesystem::path& path,
                           const std::filesystem::path& data_dir,
                           std::size_t n_synthetic, std::uint64_t seed);

}  // namespace flowddi
