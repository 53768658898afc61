#include "flowddi/vgae.hpp"

#include <algorithm>
#include <cmath>

#include "flowddi/tape.hpp"

namespace flowddi {

void VgaeConfig::validate() const {
  if (latent_dim == 0) throw ContractError("latent_dim must be positive");
  if (encoder_layers == 0) throw ContractError("encoder_layers must be >= 1");
  if (hidden_dim == 0) throw ContractError("hidden_dim must be positive");
  if (learning_rate <= 0.0) throw ContractError("learning_rate must be positive");
  if (kl_weight < 0.0) throw ContractError("kl_weight must be nonnegative");
  if (optimizer != "adam" && optimizer != "sgd")
    throw ContractError("optimizer must be 'adam' or 'sgd'");
  if (init != "fresh" && init != "pretrain")
    throw ContractError("init must be 'fresh' or 'pretrain'");
}

namespace {

// Per-layer input/output widths; the final layer emits mu and log_var heads.
std::vector<std::size_t> layer_dims(std::size_t hidden, std::size_t latent,
                                    std::size_t layers) {
  std::vector<std::size_t> dims(layers + 1, hidden);
  dims.back() = 2 * latent;
  return dims;
}

std::string layer_name(std::size_t l, const std::string& part) {
  return "layer" + std::to_string(l) + "." + part;
}

Tensor normal_tensor(std::vector<std::size_t> shape, Rng& rng, double scale) {
  Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t.at(i) = rng.normal() * scale;
  return t;
}

}  // namespace

VgaeModel::VgaeModel(std::size_t drugs, std::size_t types, std::size_t latent,
                     std::size_t hidden, std::size_t layers)
    : drug_count_(drugs),
      type_count_(types),
      latent_dim_(latent),
      hidden_dim_(hidden),
      encoder_layers_(layers) {}

VgaeModel::VgaeModel(std::size_t drug_count, std::size_t type_count,
                     const VgaeConfig& cfg, Rng& rng)
    : VgaeModel(drug_count, type_count, cfg.latent_dim, cfg.hidden_dim,
                cfg.encoder_layers) {
  cfg.validate();
  if (drug_count == 0 || type_count == 0)
    throw ContractError("VgaeModel requires nonempty drug and type vocabularies");

  params_.add("embed", normal_tensor({drug_count_, hidden_dim_}, rng, 0.5));
  const auto dims = layer_dims(hidden_dim_, latent_dim_, encoder_layers_);
  for (std::size_t l = 0; l < encoder_layers_; ++l) {
    // Scaled by the relation count so the summed per-type messages keep
    // unit-order activations; the final layer starts near zero so the
    // posterior opens at N(0, I) and plain gradient descent stays stable.
    double w = 1.0 / std::sqrt(static_cast<double>(dims[l] * (type_count_ + 1)));
    if (l + 1 == encoder_layers_) w *= 0.1;
    params_.add(layer_name(l, "self"), normal_tensor({dims[l], dims[l + 1]}, rng, w));
    for (std::size_t t = 0; t < type_count_; ++t)
      params_.add(layer_name(l, "type" + std::to_string(t)),
                  normal_tensor({dims[l], dims[l + 1]}, rng, w));
    params_.add(layer_name(l, "bias"), Tensor({std::size_t{1}, dims[l + 1]}));
  }
  params_.add("decoder.relations", normal_tensor({type_count_, latent_dim_}, rng, 0.01));
}

std::map<std::string, std::string> VgaeModel::meta() const {
  return {{"kind", "vgae"},
          {"drugs", std::to_string(drug_count_)},
          {"types", std::to_string(type_count_)},
          {"latent_dim", std::to_string(latent_dim_)},
          {"hidden_dim", std::to_string(hidden_dim_)},
          {"encoder_layers", std::to_string(encoder_layers_)}};
}

VgaeModel VgaeModel::from_checkpoint(const Checkpoint& ckpt) {
  auto need = [&](const std::string& key) {
    auto it = ckpt.meta.find(key);
    if (it == ckpt.meta.end())
      throw ParseError("vgae checkpoint missing meta key: " + key);
    return std::stoull(it->second);
  };
  if (ckpt.meta.count("kind") == 0 || ckpt.meta.at("kind") != "vgae")
    throw ParseError("checkpoint is not a vgae checkpoint");
  VgaeModel model(need("drugs"), need("types"), need("latent_dim"), need("hidden_dim"),
                  need("encoder_layers"));
  const auto dims = layer_dims(model.hidden_dim_, model.latent_dim_,
                               model.encoder_layers_);
  auto expect = [&](const std::string& name, std::vector<std::size_t> shape) {
    const Tensor& t = ckpt.params.at(name);
    if (t.shape() != shape)
      throw ParseError("vgae checkpoint parameter has wrong shape: " + name);
  };
  expect("embed", {model.drug_count_, model.hidden_dim_});
  for (std::size_t l = 0; l < model.encoder_layers_; ++l) {
    expect(layer_name(l, "self"), {dims[l], dims[l + 1]});
    for (std::size_t t = 0; t < model.type_count_; ++t)
      expect(layer_name(l, "type" + std::to_string(t)), {dims[l], dims[l + 1]});
    expect(layer_name(l, "bias"), {std::size_t{1}, dims[l + 1]});
  }
  expect("decoder.relations", {model.type_count_, model.latent_dim_});
  model.params_ = ckpt.params;
  return model;
}

std::vector<Tensor> mean_aggregation_matrices(const InteractionGraph& g) {
  const std::size_t n = g.drug_count();
  std::vector<Tensor> mats;
  mats.reserve(g.type_count());
  for (std::size_t t = 0; t < g.type_count(); ++t) mats.emplace_back(Tensor({n, n}));
  std::vector<std::vector<std::size_t>> degree(g.type_count(),
                                               std::vector<std::size_t>(n, 0));
  for (const Edge& e : g.edges()) {
    ++degree[e.type][e.first];
    ++degree[e.type][e.second];
  }
  for (const Edge& e : g.edges()) {
    mats[e.type].at(e.first, e.second) +=
        1.0 / static_cast<double>(degree[e.type][e.first]);
    mats[e.type].at(e.second, e.first) +=
        1.0 / static_cast<double>(degree[e.type][e.second]);
  }
  return mats;
}

namespace {

struct EncodeValues {
  Value mu;
  Value log_var;
};

// Lifts the model parameters onto the tape (as gradient leaves or
// constants) and runs the relational encoder.
struct TapeForward {
  std::vector<Value> handles;  // aligned with parameters().items()
  EncodeValues encode;
  Value relations;
};

TapeForward encoder_forward(Tape& tape, const VgaeModel& model,
                            const std::vector<Tensor>& aggregation, bool with_grad) {
  const ParameterSet& params = model.parameters();
  TapeForward fwd;
  fwd.handles.reserve(params.size());
  for (const auto& item : params.items())
    fwd.handles.push_back(with_grad ? tape.parameter(item.tensor)
                                    : tape.constant(item.tensor));
  auto handle = [&](std::string_view name) {
    for (std::size_t i = 0; i < params.items().size(); ++i)
      if (params.items()[i].name == name) return fwd.handles[i];
    throw ContractError("missing parameter handle");
  };

  if (aggregation.size() != model.type_count())
    throw ContractError("aggregation matrix count must equal type count");
  std::vector<Value> agg;
  agg.reserve(aggregation.size());
  for (const Tensor& m : aggregation) agg.push_back(tape.constant(m));

  Value h = handle("embed");
  for (std::size_t l = 0; l < model.encoder_layers(); ++l) {
    Value pre = tape.matmul(h, handle(layer_name(l, "self")));
    for (std::size_t t = 0; t < model.type_count(); ++t) {
      Value messages = tape.matmul(agg[t], h);
      pre = tape.add(pre,
                     tape.matmul(messages, handle(layer_name(l, "type" + std::to_string(t)))));
    }
    pre = tape.add_row_bias(pre, handle(layer_name(l, "bias")));
    h = (l + 1 < model.encoder_layers()) ? tape.tanh(pre) : pre;
  }
  const std::size_t k = model.latent_dim();
  fwd.encode = EncodeValues{tape.slice_cols(h, 0, k), tape.slice_cols(h, k, k)};
  fwd.relations = handle("decoder.relations");
  return fwd;
}

void check_dims(const VgaeModel& model, const InteractionGraph& g) {
  if (model.drug_count() != g.drug_count() || model.type_count() != g.type_count())
    throw ContractError("vgae model dimensions do not match graph vocabulary");
}

LatentState encode_impl(const VgaeModel& model, const InteractionGraph& g,
                        const Tensor* noise) {
  check_dims(model, g);
  Tape tape;
  auto fwd = encoder_forward(tape, model, mean_aggregation_matrices(g),
                             /*with_grad=*/false);
  LatentState state;
  state.mu = tape.value(fwd.encode.mu);
  state.log_var = tape.value(fwd.encode.log_var);
  if (noise == nullptr) {
    state.z = state.mu;
  } else {
    state.z = state.mu;
    for (std::size_t i = 0; i < state.z.size(); ++i)
      state.z.at(i) += std::exp(0.5 * state.log_var.at(i)) * noise->at(i);
  }
  return state;
}

std::vector<double> decode_scores(const Tensor& relations, std::span<const double> z_i,
                                  std::span<const double> z_j) {
  const std::size_t types = relations.rows();
  const std::size_t k = relations.cols();
  if (z_i.size() != k || z_j.size() != k)
    throw ContractError("latent vector length does not match decoder width");
  std::vector<double> scores(types, 0.0);
  for (std::size_t t = 0; t < types; ++t) {
    double s = 0.0;
    // Grouping the pair product first keeps the score bitwise symmetric.
    for (std::size_t d = 0; d < k; ++d) s += relations.at(t, d) * (z_i[d] * z_j[d]);
    scores[t] = s;
  }
  return scores;
}

std::vector<double> softmax(std::vector<double> scores) {
  const double mx = *std::max_element(scores.begin(), scores.end());
  double total = 0.0;
  for (double& s : scores) {
    s = std::exp(s - mx);
    total += s;
  }
  for (double& s : scores) s /= total;
  return scores;
}

}  // namespace

LatentState encode(const VgaeModel& model, const InteractionGraph& g, Rng& rng) {
  Tensor noise({model.drug_count(), model.latent_dim()});
  for (std::size_t i = 0; i < noise.size(); ++i) noise.at(i) = rng.normal();
  return encode_impl(model, g, &noise);
}

LatentState encode_mean(const VgaeModel& model, const InteractionGraph& g) {
  return encode_impl(model, g, nullptr);
}

std::vector<double> VgaeModel::decode_distribution(const LatentState& latent,
                                                   DrugIndex i, DrugIndex j) const {
  return softmax(
      decode_scores(params_.at("decoder.relations"), latent.z.row(i), latent.z.row(j)));
}

std::vector<double> decode_type_distribution(const VgaeModel& model,
                                             std::span<const double> z_i,
                                             std::span<const double> z_j) {
  return softmax(decode_scores(model.parameters().at("decoder.relations"), z_i, z_j));
}

double elbo_loss(const VgaeModel& model, std::span<const Edge> batch,
                 const LatentState& latent, double kl_weight,
                 std::size_t train_edge_count) {
  if (batch.empty()) throw ContractError("elbo_loss requires a nonempty batch");
  if (train_edge_count == 0) throw ContractError("train_edge_count must be positive");
  const Tensor& relations = model.parameters().at("decoder.relations");
  double recon = 0.0;
  for (const Edge& e : batch) {
    auto scores = decode_scores(relations, latent.z.row(e.first), latent.z.row(e.second));
    const double mx = *std::max_element(scores.begin(), scores.end());
    double total = 0.0;
    for (double s : scores) total += std::exp(s - mx);
    recon -= scores[e.type] - mx - std::log(total);
  }
  double kl = 0.0;
  for (std::size_t i = 0; i < latent.mu.size(); ++i) {
    const double lv = latent.log_var.at(i);
    const double mu = latent.mu.at(i);
    kl += std::exp(lv) + mu * mu - 1.0 - lv;
  }
  kl *= 0.5;
  const double fraction =
      static_cast<double>(batch.size()) / static_cast<double>(train_edge_count);
  return recon + kl_weight * fraction * kl;
}

ElboGradients elbo_with_gradients(const VgaeModel& model, const InteractionGraph& g,
                                  std::span<const Edge> batch, double kl_weight,
                                  const Tensor& noise,
                                  const std::vector<Tensor>& aggregation) {
  check_dims(model, g);
  if (batch.empty()) throw ContractError("elbo_with_gradients requires a nonempty batch");

  Tape tape;
  auto fwd = encoder_forward(tape, model, aggregation, /*with_grad=*/true);
  Value mu = fwd.encode.mu;
  Value log_var = fwd.encode.log_var;
  Value sigma = tape.exp(tape.scale(log_var, 0.5));
  Value z = tape.add(mu, tape.mul(sigma, tape.constant(noise)));

  std::vector<std::size_t> rows_i, rows_j;
  rows_i.reserve(batch.size());
  rows_j.reserve(batch.size());
  Tensor label_mask({batch.size(), model.type_count()});
  for (std::size_t e = 0; e < batch.size(); ++e) {
    rows_i.push_back(batch[e].first);
    rows_j.push_back(batch[e].second);
    label_mask.at(e, batch[e].type) = 1.0;
  }
  Value zi = tape.gather_rows(z, std::move(rows_i));
  Value zj = tape.gather_rows(z, std::move(rows_j));
  Value scores = tape.matmul(tape.mul(zi, zj), tape.transpose(fwd.relations));
  Value log_probs = tape.log_softmax_row(scores);
  Value recon = tape.scale(tape.sum(tape.mul(log_probs, tape.constant(label_mask))), -1.0);

  const double nk = static_cast<double>(model.drug_count() * model.latent_dim());
  Value kl = tape.scale(
      tape.add_scalar(tape.add(tape.add(tape.sum(tape.exp(log_var)),
                                        tape.sum(tape.mul(mu, mu))),
                               tape.scale(tape.sum(log_var), -1.0)),
                      -nk),
      0.5);
  const double fraction =
      static_cast<double>(batch.size()) / static_cast<double>(g.edge_count() > 0
                                                                  ? g.edge_count()
                                                                  : batch.size());
  Value loss = tape.add(recon, tape.scale(kl, kl_weight * fraction));
  tape.backward(loss);

  ElboGradients out;
  out.loss = tape.value(loss).item();
  out.grads.reserve(fwd.handles.size());
  for (Value h : fwd.handles) out.grads.push_back(tape.grad(h));
  return out;
}

std::pair<TypeIndex, std::vector<double>> predict_edge(const VgaeModel& model,
                                                       const LatentState& latent,
                                                       DrugIndex i, DrugIndex j) {
  if (i == j) throw ContractError("predict_edge requires two distinct drugs");
  auto probs = model.decode_distribution(latent, i, j);
  TypeIndex best = 0;
  for (TypeIndex t = 1; t < probs.size(); ++t)
    if (probs[t] > probs[best]) best = t;  // ties keep the lowest index
  return {best, std::move(probs)};
}

namespace {

VgaeTrainResult train_vgae_impl(const InteractionGraph& g, const VgaeConfig& cfg,
                                Rng rng, VgaeModel model) {
  const auto aggregation = mean_aggregation_matrices(g);
  const auto& all_edges = g.edges();
  AdamOptimizer adam(cfg.learning_rate);
  const bool use_adam = cfg.optimizer == "adam";

  std::vector<double> curve;
  curve.reserve(cfg.epochs);
  std::vector<std::size_t> order(all_edges.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<std::span<const Edge>> batches;
    std::vector<Edge> shuffled;
    if (cfg.batch_size == 0 || cfg.batch_size >= all_edges.size()) {
      batches.emplace_back(all_edges);
    } else {
      for (std::size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[rng.index(i)]);
      shuffled.reserve(all_edges.size());
      for (std::size_t idx : order) shuffled.push_back(all_edges[idx]);
      for (std::size_t start = 0; start < shuffled.size(); start += cfg.batch_size)
        batches.emplace_back(std::span<const Edge>(shuffled).subspan(
            start, std::min(cfg.batch_size, shuffled.size() - start)));
    }

    for (const auto& batch : batches) {
      Tensor noise({g.drug_count(), cfg.latent_dim});
      for (std::size_t i = 0; i < noise.size(); ++i) noise.at(i) = rng.normal();
      auto step = elbo_with_gradients(model, g, batch, cfg.kl_weight, noise, aggregation);
      if (!std::isfinite(step.loss))
        throw TrainingError("vgae training diverged at epoch " + std::to_string(epoch));
      clip_gradient_norm(step.grads, cfg.grad_clip);
      if (use_adam)
        adam.step(model.parameters(), step.grads);
      else
        gradient_step(model.parameters(), step.grads, cfg.learning_rate);
    }

    // Curve entries are the deterministic full-graph objective (noise off)
    // so downstream trend checks are free of reparameterization jitter.
    LatentState mean_state = encode_impl(model, g, nullptr);
    const double epoch_loss =
        elbo_loss(model, all_edges, mean_state, cfg.kl_weight, all_edges.size());
    if (!std::isfinite(epoch_loss) || !model.parameters().all_finite())
      throw TrainingError("vgae training diverged at epoch " + std::to_string(epoch));
    curve.push_back(epoch_loss);
  }

  LatentState latent = encode_impl(model, g, nullptr);
  return VgaeTrainResult{std::move(model), std::move(latent), std::move(curve)};
}

}  // namespace

VgaeTrainResult train_vgae(const InteractionGraph& g, const VgaeConfig& cfg) {
  cfg.validate();
  if (g.edge_count() == 0)
    throw ValidationError("train_vgae requires a graph with at least one edge");
  Rng rng(cfg.seed);
  VgaeModel model(g.drug_count(), g.type_count(), cfg, rng);
  return train_vgae_impl(g, cfg, std::move(rng), std::move(model));
}

VgaeTrainResult train_vgae(const InteractionGraph& g, const VgaeConfig& cfg,
                           const VgaeModel& initial_model) {
  cfg.validate();
  if (g.edge_count() == 0)
    throw ValidationError("train_vgae requires a graph with at least one edge");
  if (initial_model.drug_count() != g.drug_count() ||
      initial_model.type_count() != g.type_count() ||
      initial_model.latent_dim() != cfg.latent_dim ||
      initial_model.hidden_dim() != cfg.hidden_dim ||
      initial_model.encoder_layers() != cfg.encoder_layers)
    throw ContractError("initial model does not match the fine-tuning config");
  return train_vgae_impl(g, cfg, Rng(cfg.seed), initial_model);
}

}  // namespace flowddi
