#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "flowddi/gflownet.hpp"
#include "flowddi/graph.hpp"
#include "flowddi/vgae.hpp"

namespace flowddi {

struct RewardConfig {
  double alpha = 1.0;
  double epsilon_floor = 1e-12;  // applied to the plausibility factor

  void validate() const;
};

// Rareness factor (1 / (n_t + 1))^alpha.
double rareness(std::size_t n_t, double alpha);

// Composite reward: rareness times the decoder plausibility p(t | z_i, z_j),
// the latter floored so rewards stay strictly positive.
double reward(TypeIndex t, DrugIndex i, DrugIndex j,
              std::span<const std::size_t> type_counts, const VgaeModel& vgae,
              const LatentState& latent, const RewardConfig& cfg);

struct SyntheticSet {
  std::vector<Edge> triples;  // canonical, no duplicates, none in train
  std::string policy_checkpoint_id;
  std::size_t requested = 0;
  std::size_t kept = 0;
  double mean_reward = 0.0;
  std::uint64_t vocab_hash = 0;

  bool budget_exhausted() const { return kept < requested; }
};

// Samples trajectories from the trained policy until `n` unique novel
// triples are kept or the 50n sample budget runs out; a short set is a
// warning-bearing partial result, not an error.
SyntheticSet generate_synthetic(const GfnPolicy& policy, const CandidateIndex& candidates,
                                const LatentState& latent, const VgaeModel& vgae,
                                const InteractionGraph& g_train, std::size_t n,
                                const RewardConfig& cfg, Rng& rng,
                                std::string policy_checkpoint_id = "");

// Union of the training graph and the synthetic triples with type counts
// recomputed. Vocabulary mismatch is a contract error.
InteractionGraph merge(const InteractionGraph& g_train, const SyntheticSet& synth);

// Edge list with an extra provenance column ("synthetic" for every row).
void write_synthetic_set(const SyntheticSet& synth, const InteractionGraph& vocab_source,
                         const std::filesystem::path& path);

}  // namespace flowddi
