#include "flowddi/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <set>

#include <nlohmann/json.hpp>

#include "flowddi/augment.hpp"

namespace flowddi {

using ordered_json = nlohmann::ordered_json;

namespace {

constexpr const char* kProtocolNote =
    "AUROC/AUPRC use a binary reading of the multi-type task: each pair is "
    "scored by its maximum type probability; positives are test edges, "
    "negatives are an equal count of unconnected pairs sampled uniformly "
    "with replacement. "
    "F1 is macro-averaged over types with test support; micro-F1 equals "
    "accuracy. Diversity fields describe the predicted type distribution "
    "against the true test distribution.";

struct LoadedData {
  Vocabulary vocab;
  InteractionGraph train;
  InteractionGraph valid;
  InteractionGraph test;
};

LoadedData load_data(const PipelineConfig& cfg) {
  Vocabulary vocab = read_vocabulary(cfg.vocab_path);
  auto train = ingest_edge_list_file(cfg.train_path, vocab);
  auto valid = ingest_edge_list_file(cfg.valid_path, vocab);
  auto test = ingest_edge_list_file(cfg.test_path, vocab);
  return LoadedData{std::move(vocab), std::move(train.graph), std::move(valid.graph),
                    std::move(test.graph)};
}

class ManifestWriter {
 public:
  explicit ManifestWriter(const PipelineConfig& cfg)
      : out_dir_(cfg.out_dir), manifest_(read_manifest(cfg.out_dir)) {
    manifest_.config_hash = cfg.config_hash;
  }

  std::filesystem::path path(const std::string& name) {
    add_artifact(name);
    return out_dir_ / name;
  }

  void add_artifact(const std::string& name) {
    if (std::find(manifest_.artifacts.begin(), manifest_.artifacts.end(), name) ==
        manifest_.artifacts.end())
      manifest_.artifacts.push_back(name);
  }

  void record_stage(const std::string& stage, double seconds) {
    for (auto& [name, secs] : manifest_.stage_seconds) {
      if (name == stage) {
        secs = seconds;
        return;
      }
    }
    manifest_.stage_seconds.emplace_back(stage, seconds);
  }

  RunManifest finish() {
    std::sort(manifest_.artifacts.begin(), manifest_.artifacts.end());
    ordered_json j;
    j["config_hash"] = manifest_.config_hash;
    ordered_json stages = ordered_json::object();
    for (const auto& [name, secs] : manifest_.stage_seconds)
      stages[name] = ordered_json{{"seconds", secs}};
    j["stages"] = stages;
    j["artifacts"] = manifest_.artifacts;
    add_artifact("manifest.json");
    std::sort(manifest_.artifacts.begin(), manifest_.artifacts.end());
    j["artifacts"] = manifest_.artifacts;
    std::ofstream out(out_dir_ / "manifest.json");
    if (!out)
      throw ValidationError("cannot write manifest: " +
                            (out_dir_ / "manifest.json").string());
    out << j.dump(2) << "\n";
    return manifest_;
  }

 private:
  std::filesystem::path out_dir_;
  RunManifest manifest_;
};

class StageTimer {
 public:
  StageTimer() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

void write_curve_csv(const std::vector<double>& curve,
                     const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write curve: " + path.string());
  out << std::setprecision(17) << "epoch,loss\n";
  for (std::size_t i = 0; i < curve.size(); ++i) out << i << "," << curve[i] << "\n";
}

void write_embeddings_tsv(const LatentState& latent,
                          const std::vector<std::string>& drug_labels,
                          const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write embeddings: " + path.string());
  out << std::setprecision(17) << "drug";
  for (std::size_t k = 0; k < latent.mu.cols(); ++k) out << "\tz" << k;
  out << "\n";
  for (std::size_t d = 0; d < drug_labels.size(); ++d) {
    out << drug_labels[d];
    for (std::size_t k = 0; k < latent.mu.cols(); ++k) out << "\t" << latent.mu.at(d, k);
    out << "\n";
  }
}

void require_checkpoint(const std::filesystem::path& stem, const std::string& stage) {
  if (!checkpoint_exists(stem))
    throw MissingPrerequisiteError(stage + " requires checkpoint " + stem.string() +
                                   ".{json,bin}; run the earlier stage first");
}

// Unconnected pairs (no interaction of any type in any split), drawn
// i.i.d. uniform. Sampling is with replacement so dense graphs with few
// free pairs still yield the requested count.
std::vector<std::pair<DrugIndex, DrugIndex>> sample_non_edges(const LoadedData& data,
                                                              std::size_t count,
                                                              Rng& rng) {
  const std::size_t n = data.train.drug_count();
  std::vector<std::pair<DrugIndex, DrugIndex>> chosen;
  chosen.reserve(count);
  const std::size_t budget = 10000 * count + 100000;
  std::size_t attempts = 0;
  while (chosen.size() < count) {
    if (++attempts > budget)
      throw ValidationError("could not sample unconnected pairs for negatives");
    const auto a = static_cast<DrugIndex>(rng.index(n));
    const auto b = static_cast<DrugIndex>(rng.index(n));
    if (a == b) continue;
    const std::pair<DrugIndex, DrugIndex> pair{std::min(a, b), std::max(a, b)};
    if (!data.train.pair_unconnected(pair.first, pair.second)) continue;
    if (!data.valid.pair_unconnected(pair.first, pair.second)) continue;
    if (!data.test.pair_unconnected(pair.first, pair.second)) continue;
    chosen.push_back(pair);
  }
  return chosen;
}

MetricReport evaluate_model(const VgaeModel& model, const LatentState& latent,
                            const InteractionGraph& test,
                            const std::vector<std::pair<DrugIndex, DrugIndex>>& negatives,
                            std::size_t coverage_m) {
  std::vector<std::vector<double>> scores;
  std::vector<TypeIndex> labels;
  scores.reserve(test.edge_count());
  for (const Edge& e : test.edges()) {
    scores.push_back(model.decode_distribution(latent, e.first, e.second));
    labels.push_back(e.type);
  }
  std::vector<std::vector<double>> negative_scores;
  negative_scores.reserve(negatives.size());
  for (const auto& [a, b] : negatives)
    negative_scores.push_back(model.decode_distribution(latent, a, b));

  const ClassificationReport cls = classification_metrics(scores, labels, negative_scores);

  std::vector<std::size_t> predicted_counts(test.type_count(), 0);
  for (const auto& row : scores) {
    std::size_t argmax = 0;
    for (std::size_t t = 1; t < row.size(); ++t)
      if (row[t] > row[argmax]) argmax = t;
    ++predicted_counts[argmax];
  }

  MetricReport report;
  report.auroc = cls.auroc;
  report.accuracy = cls.accuracy;
  report.auprc = cls.auprc;
  report.f1_macro = cls.macro_f1;
  report.f1_micro = cls.micro_f1;
  report.per_type = cls.per_type;
  report.shannon_entropy = shannon_entropy(Distribution::from_counts(predicted_counts));
  report.jsd = jensen_shannon_divergence(Distribution::from_counts(predicted_counts),
                                         Distribution::from_counts(test.type_counts()));
  report.coverage = coverage(predicted_counts, coverage_m);
  report.coverage_m = coverage_m;
  report.protocol = kProtocolNote;
  return report;
}

void write_metric_files(const MetricReport& report, const std::string& stem,
                        const InteractionGraph& vocab_source, ManifestWriter& manifest) {
  write_metric_report_json(report, manifest.path(stem + ".json"));
  write_metric_report_csv(report, manifest.path(stem + ".csv"));
  write_per_type_csv(report, vocab_source.type_labels(),
                     manifest.path("per_type_" + stem.substr(stem.find('_') + 1) + ".csv"));
}

std::vector<std::size_t> true_counts_for(const PipelineConfig& cfg,
                                         const LoadedData& data) {
  if (cfg.true_distribution == "full") {
    std::vector<std::size_t> counts(data.train.type_count(), 0);
    for (const auto* g : {&data.train, &data.valid, &data.test})
      for (std::size_t t = 0; t < counts.size(); ++t) counts[t] += g->type_counts()[t];
    return counts;
  }
  return std::vector<std::size_t>(data.train.type_count(), 1);  // uniform
}

}  // namespace

RunManifest read_manifest(const std::filesystem::path& out_dir) {
  RunManifest manifest;
  std::ifstream in(out_dir / "manifest.json");
  if (!in) return manifest;
  ordered_json j;
  try {
    in >> j;
  } catch (const std::exception&) {
    return manifest;  // a broken manifest is rebuilt from scratch
  }
  manifest.config_hash = j.value("config_hash", "");
  if (j.contains("stages"))
    for (const auto& [name, entry] : j.at("stages").items())
      manifest.stage_seconds.emplace_back(name, entry.value("seconds", 0.0));
  if (j.contains("artifacts"))
    for (const auto& a : j.at("artifacts")) manifest.artifacts.push_back(a);
  return manifest;
}

RunManifest run_pretrain(const PipelineConfig& cfg) {
  StageTimer timer;
  std::filesystem::create_directories(cfg.out_dir);
  ManifestWriter manifest(cfg);

  LoadedData data = load_data(cfg);
  VgaeTrainResult result = train_vgae(data.train, cfg.vgae_pretrain);

  save_checkpoint(result.model.parameters(), result.model.meta(),
                  cfg.out_dir / "vgae_pretrain");
  manifest.add_artifact("vgae_pretrain.json");
  manifest.add_artifact("vgae_pretrain.bin");
  write_embeddings_tsv(result.latent, data.train.drug_labels(),
                       manifest.path("embeddings_pretrain.tsv"));
  write_curve_csv(result.loss_curve, manifest.path("curve_vgae_pretrain.csv"));

  manifest.record_stage("pretrain", timer.seconds());
  return manifest.finish();
}

RunManifest run_train_gfn(const PipelineConfig& cfg) {
  StageTimer timer;
  std::filesystem::create_directories(cfg.out_dir);
  require_checkpoint(cfg.out_dir / "vgae_pretrain", "train-gfn");
  ManifestWriter manifest(cfg);

  LoadedData data = load_data(cfg);
  VgaeModel model = VgaeModel::from_checkpoint(load_checkpoint(cfg.out_dir / "vgae_pretrain"));
  if (model.drug_count() != data.train.drug_count() ||
      model.type_count() != data.train.type_count())
    throw ValidationError("stage-1 checkpoint does not match the configured dataset");
  LatentState latent = encode_mean(model, data.train);

  GfnTrainResult result = train_gflownet(data.train, model, latent, cfg.gfn);

  save_checkpoint(result.policy.parameters(), result.policy.meta(),
                  cfg.out_dir / "gfn_policy");
  manifest.add_artifact("gfn_policy.json");
  manifest.add_artifact("gfn_policy.bin");
  write_curve_csv(result.loss_curve, manifest.path("curve_gfn.csv"));

  manifest.record_stage("train_gfn", timer.seconds());
  return manifest.finish();
}

AugmentOutcome run_augment_retrain(const PipelineConfig& cfg) {
  StageTimer timer;
  std::filesystem::create_directories(cfg.out_dir);
  require_checkpoint(cfg.out_dir / "vgae_pretrain", "augment-retrain");
  require_checkpoint(cfg.out_dir / "gfn_policy", "augment-retrain");
  ManifestWriter manifest(cfg);

  LoadedData data = load_data(cfg);
  VgaeModel pretrained =
      VgaeModel::from_checkpoint(load_checkpoint(cfg.out_dir / "vgae_pretrain"));
  GfnPolicy policy = GfnPolicy::from_checkpoint(load_checkpoint(cfg.out_dir / "gfn_policy"));
  if (pretrained.drug_count() != data.train.drug_count() ||
      pretrained.type_count() != data.train.type_count())
    throw ValidationError("stage-1 checkpoint does not match the configured dataset");
  LatentState latent = encode_mean(pretrained, data.train);

  const CandidateIndex candidates = build_candidate_index(latent, cfg.gfn.knn_k);
  Rng augment_rng = Rng::derive(cfg.seed, "augment");
  SyntheticSet synth =
      generate_synthetic(policy, candidates, latent, pretrained, data.train,
                         cfg.n_synthetic, cfg.reward, augment_rng, "gfn_policy");
  write_synthetic_set(synth, data.train, manifest.path("synthetic.tsv"));

  InteractionGraph merged = merge(data.train, synth);
  write_edge_list(merged, manifest.path("augmented_train.tsv"));

  VgaeTrainResult final_result =
      cfg.vgae_final.init == "pretrain"
          ? train_vgae(merged, cfg.vgae_final, pretrained)
          : train_vgae(merged, cfg.vgae_final);
  save_checkpoint(final_result.model.parameters(), final_result.model.meta(),
                  cfg.out_dir / "vgae_final");
  manifest.add_artifact("vgae_final.json");
  manifest.add_artifact("vgae_final.bin");
  write_embeddings_tsv(final_result.latent, merged.drug_labels(),
                       manifest.path("embeddings_final.tsv"));
  write_curve_csv(final_result.loss_curve, manifest.path("curve_vgae_final.csv"));

  Rng negatives_rng = Rng::derive(cfg.seed, "negatives");
  const auto negatives = sample_non_edges(data, data.test.edge_count(), negatives_rng);

  const MetricReport baseline =
      evaluate_model(pretrained, latent, data.test, negatives, cfg.coverage_m);
  write_metric_files(baseline, "metrics_baseline", data.train, manifest);

  const MetricReport augmented = evaluate_model(
      final_result.model, final_result.latent, data.test, negatives, cfg.coverage_m);
  write_metric_files(augmented, "metrics_augmented", data.train, manifest);

  const auto true_counts = true_counts_for(cfg, data);
  const DiversityReport diversity = diversity_report(
      data.train.type_counts(), merged.type_counts(), true_counts, cfg.coverage_m);
  write_diversity_report_json(diversity, manifest.path("diversity.json"));

  manifest.record_stage("augment_retrain", timer.seconds());
  return AugmentOutcome{manifest.finish(), baseline,  augmented,
                        diversity,         synth.requested, synth.kept};
}

AugmentOutcome run_all(const PipelineConfig& cfg) {
  run_pretrain(cfg);
  run_train_gfn(cfg);
  return run_augment_retrain(cfg);
}

MetricReport run_evaluate(const PipelineConfig& cfg, const std::string& which) {
  if (which != "pretrain" && which != "final")
    throw ContractError("evaluate expects 'pretrain' or 'final'");
  std::filesystem::create_directories(cfg.out_dir);
  const std::string stem = which == "pretrain" ? "vgae_pretrain" : "vgae_final";
  require_checkpoint(cfg.out_dir / stem, "evaluate");
  ManifestWriter manifest(cfg);

  LoadedData data = load_data(cfg);
  VgaeModel model = VgaeModel::from_checkpoint(load_checkpoint(cfg.out_dir / stem));
  if (model.drug_count() != data.train.drug_count() ||
      model.type_count() != data.train.type_count())
    throw ValidationError("checkpoint does not match the configured dataset");

  // The final model is encoded over the graph it was trained on.
  LatentState latent;
  if (which == "final") {
    const auto merged_path = cfg.out_dir / "augmented_train.tsv";
    if (!std::filesystem::exists(merged_path))
      throw MissingPrerequisiteError("evaluate final requires " + merged_path.string());
    auto merged = ingest_edge_list_file(merged_path, data.vocab);
    latent = encode_mean(model, merged.graph);
  } else {
    latent = encode_mean(model, data.train);
  }

  Rng negatives_rng = Rng::derive(cfg.seed, "negatives");
  const auto negatives = sample_non_edges(data, data.test.edge_count(), negatives_rng);
  const MetricReport report =
      evaluate_model(model, latent, data.test, negatives, cfg.coverage_m);
  write_metric_files(report, "metrics_" + which + "_eval", data.train, manifest);
  manifest.finish();
  return report;
}

}  // namespace flowddi
