// Command-line front end for the three-stage augmentation pipeline.
// Exit codes: 0 ok, 2 input error, 3 missing prerequisite, 4 numeric failure.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "flowddi/fixture.hpp"
#include "flowddi/pipeline.hpp"

namespace {

namespace fs = std::filesystem;
using namespace flowddi;

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitMissingPrerequisite = 3;
constexpr int kExitNumeric = 4;

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "Pipeline config file")
      ->required();
  cmd->add_option("--seed", flags.seed, "Override the global seed");
  cmd->add_option("--out", flags.out_dir, "Override the output directory");
}

PipelineConfig load_config(const CommonFlags& flags) {
  PipelineConfig cfg = load_pipeline_config(flags.config_path);
  if (flags.seed) apply_seed_override(cfg, *flags.seed);
  if (flags.out_dir) apply_out_override(cfg, *flags.out_dir);
  return cfg;
}

void print_manifest(const RunManifest& manifest) {
  std::cout << "config hash: " << manifest.config_hash << "\n";
  for (const auto& [stage, seconds] : manifest.stage_seconds)
    std::cout << "stage " << stage << ": " << seconds << " s\n";
  std::cout << "artifacts (" << manifest.artifacts.size() << "):\n";
  for (const auto& artifact : manifest.artifacts) std::cout << "  " << artifact << "\n";
}

void print_metrics(const std::string& name, const MetricReport& r) {
  std::cout << name << ": auroc=" << r.auroc << " accuracy=" << r.accuracy
            << " auprc=" << r.auprc << " f1_macro=" << r.f1_macro
            << " f1_micro=" << r.f1_micro << " se=" << r.shannon_entropy
            << " jsd=" << r.jsd << " coverage=" << r.coverage << "\n";
}

int run_stage(const std::string& stage, const std::function<int()>& body) {
  try {
    return body();
  } catch (const MissingPrerequisiteError& e) {
    std::cerr << "error [" << stage << "]: " << e.what() << "\n";
    return kExitMissingPrerequisite;
  } catch (const TrainingError& e) {
    std::cerr << "error [" << stage << "]: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const ParseError& e) {
    std::cerr << "error [" << stage << "]: " << e.what() << "\n";
    return kExitInput;
  } catch (const ValidationError& e) {
    std::cerr << "error [" << stage << "]: " << e.what() << "\n";
    return kExitInput;
  } catch (const ContractError& e) {
    std::cerr << "error [" << stage << "]: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error [" << stage << "]: " << e.what() << "\n";
    return 1;
  }
}

struct FixtureFlags {
  FixtureParams params;
  std::string out_dir = "fixture";
  double train_frac = 0.6;
  double valid_frac = 0.2;
  double test_frac = 0.2;
};

int cmd_make_fixture(const FixtureFlags& flags) {
  const InteractionGraph full = make_fixture(flags.params);
  const DatasetSplit split = split_edges(
      full, SplitFractions{flags.train_frac, flags.valid_frac, flags.test_frac},
      flags.params.seed);

  const fs::path dir(flags.out_dir);
  fs::create_directories(dir);
  write_vocabulary(full, dir / "vocab.tsv");
  write_edge_list(full, dir / "full.tsv");
  write_edge_list(split.train, dir / "train.tsv");
  write_edge_list(split.valid, dir / "valid.tsv");
  write_edge_list(split.test, dir / "test.tsv");
  write_config_template(dir / "config.ini", ".",
                        std::max<std::size_t>(split.train.edge_count() / 10, 1),
                        flags.params.seed);

  std::cout << "fixture: " << full.drug_count() << " drugs, " << full.type_count()
            << " types, " << full.edge_count() << " edges ("
            << split.train.edge_count() << "/" << split.valid.edge_count() << "/"
            << split.test.edge_count() << " train/valid/test)\n";
  std::cout << "type counts:";
  for (std::size_t t = 0; t < full.type_count(); ++t)
    std::cout << " " << full.type_labels()[t] << "=" << full.type_counts()[t];
  std::cout << "\nwrote " << (dir / "config.ini").string() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GFlowNet-driven rebalancing for multi-relational interaction graphs"};
  app.require_subcommand(1);

  CommonFlags common;
  FixtureFlags fixture;
  std::string evaluate_model_name = "final";

  auto* pretrain = app.add_subcommand("pretrain", "Stage 1: train the VGAE");
  add_common_flags(pretrain, common);
  auto* train_gfn = app.add_subcommand("train-gfn", "Stage 2: train the GFlowNet policy");
  add_common_flags(train_gfn, common);
  auto* augment = app.add_subcommand(
      "augment-retrain", "Stage 3: generate synthetic triples, retrain, evaluate");
  add_common_flags(augment, common);
  auto* run_all_cmd = app.add_subcommand("run-all", "Run all three stages");
  add_common_flags(run_all_cmd, common);
  auto* evaluate = app.add_subcommand("evaluate", "Evaluate a stored checkpoint");
  add_common_flags(evaluate, common);
  evaluate->add_option("--model", evaluate_model_name, "Checkpoint to evaluate")
      ->check(CLI::IsMember({"pretrain", "final"}));

  auto* make_fixture_cmd =
      app.add_subcommand("make-fixture", "Generate a synthetic planted-structure dataset");
  make_fixture_cmd->add_option("--out", fixture.out_dir, "Output directory");
  make_fixture_cmd->add_option("--drugs", fixture.params.drugs, "Number of drugs");
  make_fixture_cmd->add_option("--types", fixture.params.types, "Number of types");
  make_fixture_cmd->add_option("--edges", fixture.params.edges, "Number of edges");
  make_fixture_cmd->add_option("--ratio", fixture.params.ratio,
                               "Geometric decay of type frequencies (1 = uniform)");
  make_fixture_cmd->add_option("--clusters", fixture.params.clusters, "Latent clusters");
  make_fixture_cmd->add_option("--primary-prob", fixture.params.primary_type_prob,
                               "Probability an edge follows its pair's planted primary type");
  make_fixture_cmd->add_option("--seed", fixture.params.seed, "Generator seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  if (make_fixture_cmd->parsed())
    return run_stage("make-fixture", [&] { return cmd_make_fixture(fixture); });

  if (pretrain->parsed())
    return run_stage("pretrain", [&] {
      print_manifest(run_pretrain(load_config(common)));
      return kExitOk;
    });
  if (train_gfn->parsed())
    return run_stage("train-gfn", [&] {
      print_manifest(run_train_gfn(load_config(common)));
      return kExitOk;
    });
  auto print_outcome = [](const AugmentOutcome& outcome) {
    print_manifest(outcome.manifest);
    if (outcome.synthetic_kept < outcome.synthetic_requested)
      std::cerr << "warning: sample budget exhausted, kept " << outcome.synthetic_kept
                << " of " << outcome.synthetic_requested << " synthetic triples\n";
    print_metrics("baseline ", outcome.baseline);
    print_metrics("augmented", outcome.augmented);
    std::cout << "diversity: se " << outcome.diversity.se_before << " -> "
              << outcome.diversity.se_after << ", jsd " << outcome.diversity.jsd_before
              << " -> " << outcome.diversity.jsd_after << ", coverage "
              << outcome.diversity.coverage_before << " -> "
              << outcome.diversity.coverage_after << "\n";
    return kExitOk;
  };
  if (augment->parsed())
    return run_stage("augment-retrain",
                     [&] { return print_outcome(run_augment_retrain(load_config(common))); });
  if (run_all_cmd->parsed())
    return run_stage("run-all",
                     [&] { return print_outcome(run_all(load_config(common))); });
  if (evaluate->parsed())
    return run_stage("evaluate", [&] {
      print_metrics(evaluate_model_name, run_evaluate(load_config(common), evaluate_model_name));
      return kExitOk;
    });
  return kExitInput;
}
