#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "flowddi/graph.hpp"
#include "flowddi/params.hpp"
#include "flowddi/rng.hpp"
#include "flowddi/vgae.hpp"

namespace flowddi {

struct GfnConfig {
  std::size_t epochs = 2000;  // gradient steps
  double learning_rate = 0.05;
  std::size_t knn_k = 20;
  double alpha = 1.0;
  std::size_t batch = 16;
  double exploration_epsilon = 0.0;  // uniform-mixture sampling only
  double reward_floor = 1e-12;
  std::uint64_t seed = 1;

  void validate() const;
};

enum class GfnStage { kInitial, kTypeChosen, kPairPartial, kTerminal };

// Construction state: () -> (t) -> (t, d_i) -> (t, d_i, d_j).
struct GfnState {
  GfnStage stage = GfnStage::kInitial;
  std::optional<TypeIndex> type;
  std::optional<DrugIndex> first;
  std::optional<DrugIndex> second;
};

struct TrajectoryRecord {
  std::array<GfnState, 4> states;
  std::array<double, 3> step_log_probs{};  // under the policy, not the
                                           // exploration mixture
  double reward = 0.0;                     // filled by the caller
  double log_reward = 0.0;

  TypeIndex type() const { return *states[3].type; }
  DrugIndex first() const { return *states[3].first; }
  DrugIndex second() const { return *states[3].second; }
};

struct Triple {
  TypeIndex type = 0;
  DrugIndex first = 0;
  DrugIndex second = 0;

  auto operator<=>(const Triple&) const = default;
};

// Exact K-nearest neighbours per drug in latent space (Euclidean on the
// posterior means), ties broken by ascending drug index, self excluded.
class CandidateIndex {
 public:
  std::span<const DrugIndex> candidates(DrugIndex d) const {
    return {flat_.data() + d * k_, k_};
  }
  std::size_t k() const { return k_; }
  std::size_t drug_count() const { return flat_.size() / k_; }

 private:
  friend CandidateIndex build_candidate_index(const LatentState&, std::size_t);
  std::size_t k_ = 0;
  std::vector<DrugIndex> flat_;
};

CandidateIndex build_candidate_index(const LatentState& latent, std::size_t knn_k);

// Three-headed forward policy with a learnable log-partition. Each head is
// a one-hidden-layer perceptron (tanh, 64 units); the second-drug head is
// conditioned on the frozen VGAE embedding of the first drug.
class GfnPolicy {
 public:
  GfnPolicy(std::size_t type_count, std::size_t drug_count, std::size_t latent_dim,
            std::uint64_t seed);

  static GfnPolicy from_checkpoint(const Checkpoint& ckpt);
  std::map<std::string, std::string> meta() const;

  std::size_t type_count() const { return type_count_; }
  std::size_t drug_count() const { return drug_count_; }
  std::size_t latent_dim() const { return latent_dim_; }

  ParameterSet& parameters() { return params_; }
  const ParameterSet& parameters() const { return params_; }

  double log_partition() const { return params_.at("log_z").item(); }

  std::vector<double> type_distribution() const;
  std::vector<double> first_drug_distribution(TypeIndex t) const;
  // Aligned with candidates' order.
  std::vector<double> second_drug_distribution(TypeIndex t, DrugIndex first,
                                               std::span<const DrugIndex> candidates,
                                               const LatentState& latent) const;

 private:
  GfnPolicy(std::size_t types, std::size_t drugs, std::size_t latent);

  std::size_t type_count_;
  std::size_t drug_count_;
  std::size_t latent_dim_;
  ParameterSet params_;
};

TrajectoryRecord sample_trajectory(const GfnPolicy& policy,
                                   const CandidateIndex& candidates,
                                   const LatentState& latent, Rng& rng,
                                   double exploration_epsilon = 0.0);

// (log Z + log P(tau) - log R)^2 recomputed under the current policy.
double tb_loss(const GfnPolicy& policy, const TrajectoryRecord& trajectory,
               const CandidateIndex& candidates, const LatentState& latent);

struct TbGradients {
  double loss = 0.0;
  std::vector<Tensor> grads;  // aligned with policy.parameters().items()
};

TbGradients tb_loss_with_gradients(const GfnPolicy& policy,
                                   std::span<const TrajectoryRecord> batch,
                                   const CandidateIndex& candidates,
                                   const LatentState& latent);

struct GfnTrainResult {
  GfnPolicy policy;
  std::vector<double> loss_curve;  // mean TB loss per step
};

GfnTrainResult train_gflownet(const InteractionGraph& g_train, const VgaeModel& vgae,
                              const LatentState& latent, const GfnConfig& cfg);

// Exact product of per-step probabilities for every reachable terminal
// triple; requires |T| * |D| * knn_k <= 1e6.
std::map<Triple, double> enumerate_terminal_distribution(const GfnPolicy& policy,
                                                         const CandidateIndex& candidates,
                                                         const LatentState& latent);

}  // namespace flowddi
