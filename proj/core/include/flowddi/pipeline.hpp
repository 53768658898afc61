#pragma once

#include <string>
#include <vector>

#include "flowddi/config.hpp"
#include "flowddi/metrics.hpp"

namespace flowddi {

// Accumulated record of a run: what was produced and how long each stage
// took. Persisted as <out>/manifest.json and merged across stage reruns.
struct RunManifest {
  std::string config_hash;
  std::vector<std::pair<std::string, double>> stage_seconds;
  std::vector<std::string> artifacts;  // sorted, relative to the out dir
};

// Stage 1: train the VGAE on the training split; writes the checkpoint,
// the embedding table, and the loss curve.
RunManifest run_pretrain(const PipelineConfig& cfg);

// Stage 2: train the GFlowNet policy against the frozen stage-1 model.
RunManifest run_train_gfn(const PipelineConfig& cfg);

struct AugmentOutcome {
  RunManifest manifest;
  MetricReport baseline;
  MetricReport augmented;
  DiversityReport diversity;
  std::size_t synthetic_requested = 0;
  std::size_t synthetic_kept = 0;
};

// Stage 3: sample synthetic triples, merge, retrain, and evaluate both
// models on the test split.
AugmentOutcome run_augment_retrain(const PipelineConfig& cfg);

// All three stages in sequence; artifacts are identical to running the
// stages separately with the same config.
AugmentOutcome run_all(const PipelineConfig& cfg);

// Evaluates a stored checkpoint ("pretrain" or "final") on the test split
// and writes metrics_<which>_eval reports.
MetricReport run_evaluate(const PipelineConfig& cfg, const std::string& which);

RunManifest read_manifest(const std::filesystem::path& out_dir);

}  // namespace flowddi
