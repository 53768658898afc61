#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "flowddi/graph.hpp"
#include "flowddi/params.hpp"
#include "flowddi/rng.hpp"
#include "flowddi/tensor.hpp"

namespace flowddi {

struct VgaeConfig {
  std::size_t latent_dim = 16;
  std::size_t encoder_layers = 2;
  std::size_t hidden_dim = 32;
  double learning_rate = 0.01;
  std::size_t epochs = 200;
  double kl_weight = 1.0;
  std::size_t batch_size = 0;      // 0 = full-graph batches
  double grad_clip = 5.0;          // global gradient-norm cap; 0 disables
  std::string optimizer = "adam";  // "adam" or "sgd" (plain gradient descent)
  std::string init = "fresh";      // stage 3 only: "fresh" or "pretrain"
  std::uint64_t seed = 1;

  void validate() const;
};

// Per-drug Gaussian posterior and the embeddings sampled from it. For
// downstream consumers (rewards, K-NN) z is the posterior mean.
struct LatentState {
  Tensor mu;       // |D| x K
  Tensor log_var;  // |D| x K
  Tensor z;        // |D| x K
};

// Relational graph-convolution encoder (per-type mean aggregation plus a
// self transform per layer, tanh between layers, final layer emitting mean
// and log-variance heads) and a diagonal bilinear type decoder.
class VgaeModel {
 public:
  VgaeModel(std::size_t drug_count, std::size_t type_count, const VgaeConfig& cfg,
            Rng& rng);

  static VgaeModel from_checkpoint(const Checkpoint& ckpt);
  std::map<std::string, std::string> meta() const;

  std::size_t drug_count() const { return drug_count_; }
  std::size_t type_count() const { return type_count_; }
  std::size_t latent_dim() const { return latent_dim_; }
  std::size_t hidden_dim() const { return hidden_dim_; }
  std::size_t encoder_layers() const { return encoder_layers_; }

  ParameterSet& parameters() { return params_; }
  const ParameterSet& parameters() const { return params_; }

  // p(t | z_i, z_j) over all types; symmetric in (i, j).
  std::vector<double> decode_distribution(const LatentState& latent, DrugIndex i,
                                          DrugIndex j) const;

 private:
  VgaeModel(std::size_t drugs, std::size_t types, std::size_t latent,
            std::size_t hidden, std::size_t layers);

  std::size_t drug_count_;
  std::size_t type_count_;
  std::size_t latent_dim_;
  std::size_t hidden_dim_;
  std::size_t encoder_layers_;
  ParameterSet params_;
};

// Row-normalized per-type adjacency operators used by the encoder; one
// |D| x |D| matrix per interaction type.
std::vector<Tensor> mean_aggregation_matrices(const InteractionGraph& g);

LatentState encode(const VgaeModel& model, const InteractionGraph& g, Rng& rng);
// Reparameterization noise disabled: z = mu.
LatentState encode_mean(const VgaeModel& model, const InteractionGraph& g);

// p(t | z_i, z_j) from raw latent vectors.
std::vector<double> decode_type_distribution(const VgaeModel& model,
                                             std::span<const double> z_i,
                                             std::span<const double> z_j);

// Negative ELBO evaluated at a given latent state: batch reconstruction
// cross-entropy plus kl_weight * (|batch| / train_edge_count) * KL(q || N(0,I)).
double elbo_loss(const VgaeModel& model, std::span<const Edge> batch,
                 const LatentState& latent, double kl_weight,
                 std::size_t train_edge_count);

struct ElboGradients {
  double loss = 0.0;
  std::vector<Tensor> grads;  // aligned with model.parameters().items()
};

// Full differentiable pass: encode with the supplied reparameterization
// noise, decode the batch, and backpropagate through encoder and decoder.
ElboGradients elbo_with_gradients(const VgaeModel& model, const InteractionGraph& g,
                                  std::span<const Edge> batch, double kl_weight,
                                  const Tensor& noise,
                                  const std::vector<Tensor>& aggregation);

std::pair<TypeIndex, std::vector<double>> predict_edge(const VgaeModel& model,
                                                       const LatentState& latent,
                                                       DrugIndex i, DrugIndex j);

struct VgaeTrainResult {
  VgaeModel model;
  LatentState latent;              // noise-free (z = mu)
  std::vector<double> loss_curve;  // per-epoch full-graph noise-free loss
};

VgaeTrainResult train_vgae(const InteractionGraph& g, const VgaeConfig& cfg);

// Continues training from an existing model (fine-tuning); dimensions must
// match the config and graph.
VgaeTrainResult train_vgae(const InteractionGraph& g, const VgaeConfig& cfg,
                           const VgaeModel& initial_model);

}  // namespace flowddi
