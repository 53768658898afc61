#include "flowddi/augment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

namespace flowddi {

void RewardConfig::validate() const {
  if (alpha < 0.0) throw ContractError("alpha must be nonnegative");
  if (epsilon_floor <= 0.0) throw ContractError("epsilon_floor must be positive");
}

double rareness(std::size_t n_t, double alpha) {
  return std::pow(1.0 / (static_cast<double>(n_t) + 1.0), alpha);
}

double reward(TypeIndex t, DrugIndex i, DrugIndex j,
              std::span<const std::size_t> type_counts, const VgaeModel& vgae,
              const LatentState& latent, const RewardConfig& cfg) {
  cfg.validate();
  if (i == j) throw ContractError("reward requires two distinct drugs");
  if (t >= type_counts.size()) throw ContractError("type index out of range");
  const double plausibility =
      std::max(vgae.decode_distribution(latent, i, j)[t], cfg.epsilon_floor);
  return rareness(type_counts[t], cfg.alpha) * plausibility;
}

SyntheticSet generate_synthetic(const GfnPolicy& policy, const CandidateIndex& candidates,
                                const LatentState& latent, const VgaeModel& vgae,
                                const InteractionGraph& g_train, std::size_t n,
                                const RewardConfig& cfg, Rng& rng,
                                std::string policy_checkpoint_id) {
  cfg.validate();
  SyntheticSet out;
  out.requested = n;
  out.policy_checkpoint_id = std::move(policy_checkpoint_id);
  out.vocab_hash = g_train.vocabulary_hash();
  if (n == 0) return out;

  const auto type_counts = g_train.type_counts();
  std::set<Edge> kept;
  double reward_total = 0.0;
  const std::size_t budget = 50 * n;
  for (std::size_t attempt = 0; attempt < budget && kept.size() < n; ++attempt) {
    const TrajectoryRecord traj = sample_trajectory(policy, candidates, latent, rng);
    const Edge edge = Edge::canonical(traj.first(), traj.second(), traj.type());
    if (g_train.contains(edge)) continue;
    if (!kept.insert(edge).second) continue;
    reward_total +=
        reward(traj.type(), traj.first(), traj.second(), type_counts, vgae, latent, cfg);
  }
  out.triples.assign(kept.begin(), kept.end());
  out.kept = out.triples.size();
  out.mean_reward = out.kept > 0 ? reward_total / static_cast<double>(out.kept) : 0.0;
  return out;
}

InteractionGraph merge(const InteractionGraph& g_train, const SyntheticSet& synth) {
  if (synth.vocab_hash != 0 && synth.vocab_hash != g_train.vocabulary_hash())
    throw ContractError("synthetic set vocabulary does not match the training graph");
  std::set<Edge> edges(g_train.edges().begin(), g_train.edges().end());
  for (const Edge& e : synth.triples) {
    if (e.first >= g_train.drug_count() || e.second >= g_train.drug_count() ||
        e.type >= g_train.type_count())
      throw ContractError("synthetic triple references an unknown drug or type");
    edges.insert(e);
  }
  return InteractionGraph(g_train.drug_labels(), g_train.type_labels(),
                          {edges.begin(), edges.end()});
}

void write_synthetic_set(const SyntheticSet& synth, const InteractionGraph& vocab_source,
                         const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write synthetic set: " + path.string());
  out << "drug_a\tdrug_b\ttype\tprovenance\n";
  for (const Edge& e : synth.triples)
    out << vocab_source.drug_labels()[e.first] << "\t"
        << vocab_source.drug_labels()[e.second] << "\t"
        << vocab_source.type_labels()[e.type] << "\tsynthetic\n";
}

}  // namespace flowddi
