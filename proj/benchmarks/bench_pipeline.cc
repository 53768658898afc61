#include <benchmark/benchmark.h>

#include "flowddi/augment.hpp"
#include "flowddi/fixture.hpp"
#include "flowddi/gflownet.hpp"
#include "flowddi/metrics.hpp"
#include "flowddi/vgae.hpp"

using namespace flowddi;

namespace {

struct Instance {
  InteractionGraph graph;
  VgaeModel model;
  LatentState latent;

  static Instance make() {
    FixtureParams fp;
    fp.drugs = 50;
    fp.types = 8;
    fp.edges = 2000;
    fp.seed = 1;
    auto g = make_fixture(fp);
    VgaeConfig vc;
    vc.latent_dim = 16;
    vc.hidden_dim = 32;
    vc.epochs = 20;
    vc.kl_weight = 0.3;
    vc.seed = 1;
    auto trained = train_vgae(g, vc);
    return Instance{std::move(g), std::move(trained.model), std::move(trained.latent)};
  }
};

void BM_VgaeEpoch(benchmark::State& state) {
  auto inst = Instance::make();
  auto agg = mean_aggregation_matrices(inst.graph);
  Rng rng(3);
  Tensor noise({inst.graph.drug_count(), inst.model.latent_dim()});
  for (std::size_t i = 0; i < noise.size(); ++i) noise.at(i) = rng.normal();
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        elbo_with_gradients(inst.model, inst.graph, inst.graph.edges(), 0.3, noise, agg));
  }
}
BENCHMARK(BM_VgaeEpoch);

void BM_SampleTrajectory(benchmark::State& state) {
  auto inst = Instance::make();
  GfnPolicy policy(inst.graph.type_count(), inst.graph.drug_count(),
                   inst.model.latent_dim(), 1);
  auto index = build_candidate_index(inst.latent, 20);
  Rng rng(5);
  for (auto _ : state)
    benchmark::DoNotOptimize(sample_trajectory(policy, index, inst.latent, rng));
}
BENCHMARK(BM_SampleTrajectory);

void BM_TbGradientStep(benchmark::State& state) {
  auto inst = Instance::make();
  GfnPolicy policy(inst.graph.type_count(), inst.graph.drug_count(),
                   inst.model.latent_dim(), 1);
  auto index = build_candidate_index(inst.latent, 20);
  Rng rng(5);
  std::vector<TrajectoryRecord> batch;
  const RewardConfig reward_cfg;
  for (int i = 0; i < 16; ++i) {
    auto traj = sample_trajectory(policy, index, inst.latent, rng);
    traj.reward = reward(traj.type(), traj.first(), traj.second(),
                         inst.graph.type_counts(), inst.model, inst.latent, reward_cfg);
    batch.push_back(traj);
  }
  for (auto _ : state)
    benchmark::DoNotOptimize(tb_loss_with_gradients(policy, batch, index, inst.latent));
}
BENCHMARK(BM_TbGradientStep);

void BM_EnumerateTerminalDistribution(benchmark::State& state) {
  auto inst = Instance::make();
  GfnPolicy policy(inst.graph.type_count(), inst.graph.drug_count(),
                   inst.model.latent_dim(), 1);
  auto index = build_candidate_index(inst.latent, 20);
  for (auto _ : state)
    benchmark::DoNotOptimize(enumerate_terminal_distribution(policy, index, inst.latent));
}
BENCHMARK(BM_EnumerateTerminalDistribution);

void BM_AurocRank(benchmark::State& state) {
  Rng rng(7);
  std::vector<double> pos(10000), neg(10000);
  for (auto& s : pos) s = rng.uniform() * 0.7 + 0.3;
  for (auto& s : neg) s = rng.uniform() * 0.7;
  for (auto _ : state) benchmark::DoNotOptimize(auroc(pos, neg));
}
BENCHMARK(BM_AurocRank);

}  // namespace

BENCHMARK_MAIN();
