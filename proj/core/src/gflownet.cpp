#include "flowddi/gflownet.hpp"

#include <algorithm>
#include <cmath>

#include "flowddi/augment.hpp"
#include "flowddi/tape.hpp"

namespace flowddi {

namespace {

constexpr std::size_t kHiddenDim = 64;
constexpr std::size_t kTypeEmbedDim = 16;
constexpr std::size_t kContextDim = 16;
constexpr double kEnumerationGuard = 1e6;

Tensor normal_tensor(std::vector<std::size_t> shape, Rng& rng, double scale) {
  Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t.at(i) = rng.normal() * scale;
  return t;
}

std::size_t sample_categorical(std::span<const double> probs, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return i;
  }
  return probs.size() - 1;
}

}  // namespace

void GfnConfig::validate() const {
  if (learning_rate <= 0.0) throw ContractError("learning_rate must be positive");
  if (knn_k == 0) throw ContractError("knn_k must be >= 1");
  if (batch == 0) throw ContractError("batch must be >= 1");
  if (alpha < 0.0) throw ContractError("alpha must be nonnegative");
  if (exploration_epsilon < 0.0 || exploration_epsilon > 1.0)
    throw ContractError("exploration_epsilon must lie in [0, 1]");
  if (reward_floor <= 0.0) throw ContractError("reward_floor must be positive");
}

CandidateIndex build_candidate_index(const LatentState& latent, std::size_t knn_k) {
  if (knn_k == 0) throw ContractError("knn_k must be >= 1");
  const std::size_t n = latent.mu.rows();
  if (n < 2) throw ContractError("candidate index requires at least 2 drugs");
  const std::size_t k = std::min(knn_k, n - 1);

  CandidateIndex index;
  index.k_ = k;
  index.flat_.reserve(n * k);
  std::vector<std::pair<double, DrugIndex>> dists;
  for (std::size_t i = 0; i < n; ++i) {
    dists.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      double d2 = 0.0;
      for (std::size_t c = 0; c < latent.mu.cols(); ++c) {
        const double diff = latent.mu.at(i, c) - latent.mu.at(j, c);
        d2 += diff * diff;
      }
      dists.emplace_back(d2, static_cast<DrugIndex>(j));
    }
    std::sort(dists.begin(), dists.end());
    for (std::size_t c = 0; c < k; ++c) index.flat_.push_back(dists[c].second);
  }
  return index;
}

GfnPolicy::GfnPolicy(std::size_t types, std::size_t drugs, std::size_t latent)
    : type_count_(types), drug_count_(drugs), latent_dim_(latent) {}

GfnPolicy::GfnPolicy(std::size_t type_count, std::size_t drug_count,
                     std::size_t latent_dim, std::uint64_t seed)
    : GfnPolicy(type_count, drug_count, latent_dim) {
  if (type_count == 0 || drug_count < 2)
    throw ContractError("GfnPolicy requires >= 1 type and >= 2 drugs");
  Rng rng(seed);
  // Output layers start at zero so the initial policy is exactly uniform at
  // every step.
  auto add_head = [&](const std::string& head, std::size_t in, std::size_t out) {
    params_.add(head + ".w1",
                normal_tensor({in, kHiddenDim}, rng, 1.0 / std::sqrt(double(in))));
    params_.add(head + ".b1", Tensor({std::size_t{1}, kHiddenDim}));
    params_.add(head + ".w2", Tensor({kHiddenDim, out}));
    params_.add(head + ".b2", Tensor({std::size_t{1}, out}));
  };
  params_.add("type.context", normal_tensor({std::size_t{1}, kContextDim}, rng, 1.0));
  params_.add("type.embed", normal_tensor({type_count_, kTypeEmbedDim}, rng, 1.0));
  add_head("type", kContextDim, type_count_);
  add_head("drug1", kTypeEmbedDim, drug_count_);
  add_head("drug2", kTypeEmbedDim + latent_dim_, drug_count_);
  params_.add("log_z", Tensor({std::size_t{1}}));
}

std::map<std::string, std::string> GfnPolicy::meta() const {
  return {{"kind", "gfn-policy"},
          {"types", std::to_string(type_count_)},
          {"drugs", std::to_string(drug_count_)},
          {"latent_dim", std::to_string(latent_dim_)}};
}

GfnPolicy GfnPolicy::from_checkpoint(const Checkpoint& ckpt) {
  auto need = [&](const std::string& key) {
    auto it = ckpt.meta.find(key);
    if (it == ckpt.meta.end())
      throw ParseError("gfn checkpoint missing meta key: " + key);
    return std::stoull(it->second);
  };
  if (ckpt.meta.count("kind") == 0 || ckpt.meta.at("kind") != "gfn-policy")
    throw ParseError("checkpoint is not a gfn policy checkpoint");
  GfnPolicy policy(need("types"), need("drugs"), need("latent_dim"));
  auto expect = [&](const std::string& name, std::vector<std::size_t> shape) {
    const Tensor& t = ckpt.params.at(name);
    if (t.shape() != shape)
      throw ParseError("gfn checkpoint parameter has wrong shape: " + name);
  };
  expect("type.context", {1, kContextDim});
  expect("type.embed", {policy.type_count_, kTypeEmbedDim});
  auto expect_head = [&](const std::string& head, std::size_t in, std::size_t out) {
    expect(head + ".w1", {in, kHiddenDim});
    expect(head + ".b1", {1, kHiddenDim});
    expect(head + ".w2", {kHiddenDim, out});
    expect(head + ".b2", {1, out});
  };
  expect_head("type", kContextDim, policy.type_count_);
  expect_head("drug1", kTypeEmbedDim, policy.drug_count_);
  expect_head("drug2", kTypeEmbedDim + policy.latent_dim_, policy.drug_count_);
  expect("log_z", {1});
  policy.params_ = ckpt.params;
  return policy;
}

namespace {

// Plain one-hidden-layer scores: tanh(x W1 + b1) W2 + b2, as a 1 x out row.
Tensor head_scores(const ParameterSet& params, const std::string& head,
                   const Tensor& input) {
  Tensor h = flowddi::tanh(
      add_row_bias(matmul(input, params.at(head + ".w1")), params.at(head + ".b1")));
  return add_row_bias(matmul(h, params.at(head + ".w2")), params.at(head + ".b2"));
}

std::vector<double> softmax_vector(const Tensor& scores) {
  Tensor p = softmax_rows(scores);
  return {p.values().begin(), p.values().end()};
}

Tensor type_embedding_row(const ParameterSet& params, TypeIndex t) {
  const std::size_t idx[1] = {t};
  return flowddi::gather_rows(params.at("type.embed"), idx);
}

Tensor latent_row(const LatentState& latent, DrugIndex d) {
  const std::size_t idx[1] = {d};
  return flowddi::gather_rows(latent.z, idx);
}

}  // namespace

std::vector<double> GfnPolicy::type_distribution() const {
  return softmax_vector(head_scores(params_, "type", params_.at("type.context")));
}

std::vector<double> GfnPolicy::first_drug_distribution(TypeIndex t) const {
  if (t >= type_count_) throw ContractError("type index out of range");
  return softmax_vector(head_scores(params_, "drug1", type_embedding_row(params_, t)));
}

std::vector<double> GfnPolicy::second_drug_distribution(
    TypeIndex t, DrugIndex first, std::span<const DrugIndex> candidates,
    const LatentState& latent) const {
  if (t >= type_count_ || first >= drug_count_)
    throw ContractError("state indices out of range");
  if (candidates.empty()) throw ContractError("empty candidate set");
  Tensor input = concat_cols(type_embedding_row(params_, t), latent_row(latent, first));
  Tensor scores = head_scores(params_, "drug2", input);
  std::vector<std::size_t> cols(candidates.begin(), candidates.end());
  return softmax_vector(flowddi::gather_cols(scores, cols));
}

TrajectoryRecord sample_trajectory(const GfnPolicy& policy,
                                   const CandidateIndex& candidates,
                                   const LatentState& latent, Rng& rng,
                                   double exploration_epsilon) {
  auto pick = [&](std::span<const double> probs) {
    if (exploration_epsilon > 0.0 && rng.uniform() < exploration_epsilon)
      return static_cast<std::size_t>(rng.index(probs.size()));
    return sample_categorical(probs, rng);
  };

  TrajectoryRecord traj;
  traj.states[0] = GfnState{};

  const auto type_probs = policy.type_distribution();
  const auto t = static_cast<TypeIndex>(pick(type_probs));
  traj.step_log_probs[0] = std::log(type_probs[t]);
  traj.states[1] = GfnState{GfnStage::kTypeChosen, t, {}, {}};

  const auto drug1_probs = policy.first_drug_distribution(t);
  const auto d_i = static_cast<DrugIndex>(pick(drug1_probs));
  traj.step_log_probs[1] = std::log(drug1_probs[d_i]);
  traj.states[2] = GfnState{GfnStage::kPairPartial, t, d_i, {}};

  const auto cand = candidates.candidates(d_i);
  const auto drug2_probs = policy.second_drug_distribution(t, d_i, cand, latent);
  const std::size_t pos = pick(drug2_probs);
  traj.step_log_probs[2] = std::log(drug2_probs[pos]);
  traj.states[3] = GfnState{GfnStage::kTerminal, t, d_i, cand[pos]};
  return traj;
}

double tb_loss(const GfnPolicy& policy, const TrajectoryRecord& trajectory,
               const CandidateIndex& candidates, const LatentState& latent) {
  if (trajectory.reward <= 0.0)
    throw ContractError("tb_loss requires a positive trajectory reward");
  const TypeIndex t = trajectory.type();
  const DrugIndex d_i = trajectory.first();
  const DrugIndex d_j = trajectory.second();
  const auto cand = candidates.candidates(d_i);
  const auto it = std::find(cand.begin(), cand.end(), d_j);
  if (it == cand.end())
    throw ContractError("trajectory second drug is not in the candidate set");

  double log_p = std::log(policy.type_distribution()[t]);
  log_p += std::log(policy.first_drug_distribution(t)[d_i]);
  log_p += std::log(policy.second_drug_distribution(
      t, d_i, cand, latent)[static_cast<std::size_t>(it - cand.begin())]);
  const double residual = policy.log_partition() + log_p - std::log(trajectory.reward);
  return residual * residual;
}

namespace {

// Shared tape machinery for a batch TB loss: per-step log-softmax rows are
// built lazily and cached so repeated states in a batch add no new nodes.
struct TbTape {
  Tape tape;
  std::vector<Value> handles;
  const GfnPolicy& policy;
  const CandidateIndex& candidates;
  const LatentState& latent;
  Value type_log_probs;
  std::map<TypeIndex, Value> drug1_cache;
  std::map<std::pair<TypeIndex, DrugIndex>, Value> drug2_cache;

  explicit TbTape(const GfnPolicy& p, const CandidateIndex& c, const LatentState& l)
      : policy(p), candidates(c), latent(l) {
    const auto& params = policy.parameters();
    handles.reserve(params.size());
    for (const auto& item : params.items()) handles.push_back(tape.parameter(item.tensor));
    type_log_probs = tape.log_softmax_row(head("type", handle("type.context")));
  }

  Value handle(std::string_view name) const {
    const auto& items = policy.parameters().items();
    for (std::size_t i = 0; i < items.size(); ++i)
      if (items[i].name == name) return handles[i];
    throw ContractError("missing policy parameter handle");
  }

  Value head(const std::string& name, Value input) {
    Value h = tape.tanh(
        tape.add_row_bias(tape.matmul(input, handle(name + ".w1")), handle(name + ".b1")));
    return tape.add_row_bias(tape.matmul(h, handle(name + ".w2")), handle(name + ".b2"));
  }

  Value type_row(TypeIndex t) {
    return tape.gather_rows(handle("type.embed"), {static_cast<std::size_t>(t)});
  }

  Value drug1_log_probs(TypeIndex t) {
    auto it = drug1_cache.find(t);
    if (it != drug1_cache.end()) return it->second;
    Value v = tape.log_softmax_row(head("drug1", type_row(t)));
    drug1_cache.emplace(t, v);
    return v;
  }

  Value drug2_log_probs(TypeIndex t, DrugIndex d_i) {
    auto key = std::make_pair(t, d_i);
    auto it = drug2_cache.find(key);
    if (it != drug2_cache.end()) return it->second;
    const auto cand = candidates.candidates(d_i);
    Value input = tape.concat_cols(type_row(t), tape.constant(latent_row(latent, d_i)));
    Value scores = head("drug2", input);
    std::vector<std::size_t> cols(cand.begin(), cand.end());
    Value v = tape.log_softmax_row(tape.gather_cols(scores, std::move(cols)));
    drug2_cache.emplace(key, v);
    return v;
  }

  // {1}-shaped scalar picked out of a 1 x n row.
  Value pick(Value row, std::size_t col) {
    return tape.sum(tape.gather_cols(row, {col}));
  }
};

}  // namespace

TbGradients tb_loss_with_gradients(const GfnPolicy& policy,
                                   std::span<const TrajectoryRecord> batch,
                                   const CandidateIndex& candidates,
                                   const LatentState& latent) {
  if (batch.empty()) throw ContractError("tb_loss_with_gradients requires a batch");
  TbTape tb(policy, candidates, latent);
  Value log_z = tb.handle("log_z");

  Value total{};
  bool first = true;
  for (const TrajectoryRecord& traj : batch) {
    if (traj.reward <= 0.0)
      throw ContractError("tb_loss requires a positive trajectory reward");
    const TypeIndex t = traj.type();
    const DrugIndex d_i = traj.first();
    const DrugIndex d_j = traj.second();
    const auto cand = tb.candidates.candidates(d_i);
    const auto it = std::find(cand.begin(), cand.end(), d_j);
    if (it == cand.end())
      throw ContractError("trajectory second drug is not in the candidate set");
    const auto pos = static_cast<std::size_t>(it - cand.begin());

    Value log_p = tb.tape.add(
        tb.tape.add(tb.pick(tb.type_log_probs, t), tb.pick(tb.drug1_log_probs(t), d_i)),
        tb.pick(tb.drug2_log_probs(t, d_i), pos));
    Value residual =
        tb.tape.add_scalar(tb.tape.add(log_p, log_z), -std::log(traj.reward));
    Value loss = tb.tape.mul(residual, residual);
    total = first ? loss : tb.tape.add(total, loss);
    first = false;
  }
  Value mean_loss = tb.tape.scale(total, 1.0 / static_cast<double>(batch.size()));
  tb.tape.backward(mean_loss);

  TbGradients out;
  out.loss = tb.tape.value(mean_loss).item();
  out.grads.reserve(tb.handles.size());
  for (Value h : tb.handles) out.grads.push_back(tb.tape.grad(h));
  return out;
}

GfnTrainResult train_gflownet(const InteractionGraph& g_train, const VgaeModel& vgae,
                              const LatentState& latent, const GfnConfig& cfg) {
  cfg.validate();
  if (latent.mu.rows() != vgae.drug_count())
    throw ContractError("latent state does not match the vgae model");

  GfnPolicy policy(vgae.type_count(), vgae.drug_count(), vgae.latent_dim(), cfg.seed);
  const CandidateIndex candidates = build_candidate_index(latent, cfg.knn_k);
  const auto type_counts = g_train.type_counts();
  const RewardConfig reward_cfg{cfg.alpha, cfg.reward_floor};

  Rng rng(cfg.seed);
  std::vector<double> curve;
  curve.reserve(cfg.epochs);
  std::vector<TrajectoryRecord> batch;
  for (std::size_t step = 0; step < cfg.epochs; ++step) {
    batch.clear();
    for (std::size_t b = 0; b < cfg.batch; ++b) {
      TrajectoryRecord traj =
          sample_trajectory(policy, candidates, latent, rng, cfg.exploration_epsilon);
      traj.reward = reward(traj.type(), traj.first(), traj.second(), type_counts, vgae,
                           latent, reward_cfg);
      traj.log_reward = std::log(traj.reward);
      batch.push_back(std::move(traj));
    }
    auto grads = tb_loss_with_gradients(policy, batch, candidates, latent);
    if (!std::isfinite(grads.loss))
      throw TrainingError("gflownet training diverged at step " + std::to_string(step));
    gradient_step(policy.parameters(), grads.grads, cfg.learning_rate);
    if (!policy.parameters().all_finite())
      throw TrainingError("gflownet training diverged at step " + std::to_string(step));
    curve.push_back(grads.loss);
  }
  return GfnTrainResult{std::move(policy), std::move(curve)};
}

std::map<Triple, double> enumerate_terminal_distribution(
    const GfnPolicy& policy, const CandidateIndex& candidates, const LatentState& latent) {
  const double states = static_cast<double>(policy.type_count()) *
                        static_cast<double>(policy.drug_count()) *
                        static_cast<double>(candidates.k());
  if (states > kEnumerationGuard)
    throw ContractError("terminal state space too large to enumerate");

  std::map<Triple, double> dist;
  const auto type_probs = policy.type_distribution();
  for (TypeIndex t = 0; t < policy.type_count(); ++t) {
    const auto drug1_probs = policy.first_drug_distribution(t);
    for (DrugIndex d_i = 0; d_i < policy.drug_count(); ++d_i) {
      const auto cand = candidates.candidates(d_i);
      const auto drug2_probs = policy.second_drug_distribution(t, d_i, cand, latent);
      for (std::size_t c = 0; c < cand.size(); ++c)
        dist[Triple{t, d_i, cand[c]}] = type_probs[t] * drug1_probs[d_i] * drug2_probs[c];
    }
  }
  return dist;
}

}  // namespace flowddi
