#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "flowddi/augment.hpp"
#include "flowddi/fixture.hpp"
#include "flowddi/gflownet.hpp"
#include "flowddi/gradcheck.hpp"
#include "flowddi/params.hpp"
#include "flowddi/vgae.hpp"

using namespace flowddi;

namespace {

LatentState latent_from_rows(std::vector<std::vector<double>> rows) {
  LatentState state;
  const std::size_t n = rows.size(), k = rows.front().size();
  state.mu = Tensor({n, k});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < k; ++j) state.mu.at(i, j) = rows[i][j];
  state.log_var = Tensor({n, k});
  state.z = state.mu;
  return state;
}

struct TinyInstance {
  InteractionGraph graph;
  VgaeModel model;
  LatentState latent;
};

TinyInstance tiny_instance() {
  FixtureParams fp;
  fp.drugs = 6;
  fp.types = 3;
  fp.edges = 24;
  fp.ratio = 0.5;
  fp.clusters = 3;
  fp.seed = 11;
  auto g = make_fixture(fp);
  VgaeConfig vc;
  vc.latent_dim = 8;
  vc.hidden_dim = 16;
  vc.encoder_layers = 2;
  vc.learning_rate = 0.01;
  vc.epochs = 300;
  vc.batch_size = 8;
  vc.kl_weight = 0.05;
  vc.seed = 11;
  auto trained = train_vgae(g, vc);
  return TinyInstance{std::move(g), std::move(trained.model), std::move(trained.latent)};
}

double total_variation(const std::map<Triple, double>& a,
                       const std::map<Triple, double>& b) {
  double tv = 0.0;
  for (const auto& [triple, p] : a) {
    auto it = b.find(triple);
    tv += std::abs(p - (it == b.end() ? 0.0 : it->second));
  }
  return 0.5 * tv;
}

}  // namespace

TEST_SUITE("gflownet") {

TEST_CASE("candidate index on three collinear points") {
  auto latent = latent_from_rows({{0.0}, {1.0}, {3.0}});
  auto index = build_candidate_index(latent, 1);
  CHECK(index.candidates(0)[0] == 1);
  CHECK(index.candidates(1)[0] == 0);  // nearer endpoint
  CHECK(index.candidates(2)[0] == 1);
}

TEST_CASE("candidate index saturates at all other drugs") {
  auto latent = latent_from_rows({{0.0}, {1.0}, {2.0}, {5.0}});
  auto index = build_candidate_index(latent, 99);
  CHECK(index.k() == 3);
  for (DrugIndex d = 0; d < 4; ++d) {
    auto cand = index.candidates(d);
    CHECK(cand.size() == 3);
    CHECK(std::find(cand.begin(), cand.end(), d) == cand.end());
  }
}

TEST_CASE("candidate ties resolve by ascending drug index") {
  auto latent = latent_from_rows({{0.0}, {1.0}, {1.0}, {1.0}});
  auto a = build_candidate_index(latent, 2);
  auto b = build_candidate_index(latent, 2);
  CHECK(a.candidates(0)[0] == 1);
  CHECK(a.candidates(0)[1] == 2);
  for (DrugIndex d = 0; d < 4; ++d)
    CHECK(std::equal(a.candidates(d).begin(), a.candidates(d).end(),
                     b.candidates(d).begin()));
}

TEST_CASE("candidate index contracts") {
  auto latent = latent_from_rows({{0.0}});
  CHECK_THROWS_AS(build_candidate_index(latent, 1), ContractError);
  auto two = latent_from_rows({{0.0}, {1.0}});
  CHECK_THROWS_AS(build_candidate_index(two, 0), ContractError);
}

TEST_CASE("freshly initialized policy samples uniformly") {
  auto latent = latent_from_rows({{0.0, 1.0}, {1.0, 0.0}, {2.0, 2.0}, {3.0, 1.0}});
  GfnPolicy policy(2, 4, 2, /*seed=*/3);
  auto index = build_candidate_index(latent, 3);

  auto type_probs = policy.type_distribution();
  for (double p : type_probs) CHECK(p == doctest::Approx(0.5).epsilon(1e-12));
  auto drug1 = policy.first_drug_distribution(1);
  for (double p : drug1) CHECK(p == doctest::Approx(0.25).epsilon(1e-12));

  // P(specific triple) = 1 / (|T| |D| (|D|-1)) = 1/24; 1e5 samples, 3 sigma.
  Rng rng(5);
  const int n = 100000;
  std::map<Triple, int> counts;
  for (int i = 0; i < n; ++i) {
    auto traj = sample_trajectory(policy, index, latent, rng);
    ++counts[Triple{traj.type(), traj.first(), traj.second()}];
  }
  const double p = 1.0 / 24.0;
  const double sigma = std::sqrt(n * p * (1.0 - p));
  CHECK(counts.size() == 24);
  for (const auto& [triple, c] : counts)
    CHECK(std::abs(c - n * p) <= 3.0 * sigma);
}

TEST_CASE("recorded step log-probs match the policy") {
  auto inst = tiny_instance();
  GfnPolicy policy(inst.model.type_count(), inst.model.drug_count(),
                   inst.model.latent_dim(), 7);
  auto index = build_candidate_index(inst.latent, 5);
  Rng rng(9);
  for (int i = 0; i < 30; ++i) {
    auto traj = sample_trajectory(policy, index, inst.latent, rng);
    const double recorded =
        traj.step_log_probs[0] + traj.step_log_probs[1] + traj.step_log_probs[2];
    traj.reward = 1.0;
    const double loss = tb_loss(policy, traj, index, inst.latent);
    const double residual = policy.log_partition() + recorded - std::log(traj.reward);
    CHECK(loss == doctest::Approx(residual * residual).epsilon(1e-9));
    for (double lp : traj.step_log_probs) CHECK(lp <= 0.0);
  }
}

TEST_CASE("knn_k of 1 makes the second drug deterministic") {
  auto latent = latent_from_rows({{0.0}, {0.4}, {2.0}, {5.0}});
  GfnPolicy policy(2, 4, 1, 13);
  auto index = build_candidate_index(latent, 1);
  Rng rng(1);
  for (int i = 0; i < 50; ++i) {
    auto traj = sample_trajectory(policy, index, latent, rng);
    CHECK(traj.second() == index.candidates(traj.first())[0]);
  }
}

TEST_CASE("tb loss is zero when the balance holds and quadratic in the residual") {
  auto latent = latent_from_rows({{0.0, 1.0}, {1.0, 0.0}, {2.0, 2.0}});
  GfnPolicy policy(2, 3, 2, 21);
  auto index = build_candidate_index(latent, 2);
  Rng rng(2);
  auto traj = sample_trajectory(policy, index, latent, rng);

  const double log_p =
      traj.step_log_probs[0] + traj.step_log_probs[1] + traj.step_log_probs[2];
  traj.reward = std::exp(policy.log_partition() + log_p);
  CHECK(tb_loss(policy, traj, index, latent) == doctest::Approx(0.0).epsilon(1e-18));

  // Scaling the reward by e^r makes the residual -r.
  auto off = traj;
  off.reward = traj.reward * std::exp(1.0);
  CHECK(tb_loss(policy, off, index, latent) == doctest::Approx(1.0).epsilon(1e-9));
  off.reward = traj.reward * std::exp(2.0);
  CHECK(tb_loss(policy, off, index, latent) == doctest::Approx(4.0).epsilon(1e-9));

  off.reward = 0.0;
  CHECK_THROWS_AS(tb_loss(policy, off, index, latent), ContractError);
}

TEST_CASE("tb gradient matches central finite differences") {
  auto latent = latent_from_rows({{0.2, 1.0}, {1.0, -0.3}, {-0.5, 2.0}, {0.7, 0.7}});
  GfnPolicy policy(3, 4, 2, 31);
  auto index = build_candidate_index(latent, 2);
  Rng rng(4);
  std::vector<TrajectoryRecord> batch;
  for (int i = 0; i < 3; ++i) {
    auto traj = sample_trajectory(policy, index, latent, rng);
    traj.reward = 0.05 + 0.3 * rng.uniform();
    batch.push_back(traj);
  }
  // Nudge the output heads off zero so the check exercises generic values.
  Rng noise(8);
  for (auto* t : policy.parameters().tensors())
    for (std::size_t i = 0; i < t->size(); ++i) t->at(i) += 0.05 * noise.normal();

  auto analytic = tb_loss_with_gradients(policy, batch, index, latent).grads;
  auto params = policy.parameters().tensors();
  auto eval = [&] { return tb_loss_with_gradients(policy, batch, index, latent).loss; };
  auto report = finite_difference_check(eval, params, analytic, 1e-5, 1e-4);
  CAPTURE(report.max_rel_err);
  CHECK(report.ok());
}

TEST_CASE("enumeration of a uniform policy is uniform and complete") {
  auto latent = latent_from_rows({{0.0, 1.0}, {1.0, 0.0}, {2.0, 2.0}, {3.0, 1.0}});
  GfnPolicy policy(2, 4, 2, 3);
  auto index = build_candidate_index(latent, 3);
  auto dist = enumerate_terminal_distribution(policy, index, latent);
  CHECK(dist.size() == 2 * 4 * 3);
  double total = 0.0;
  for (const auto& [triple, p] : dist) {
    CHECK(p == doctest::Approx(1.0 / 24.0).epsilon(1e-12));
    total += p;
  }
  CHECK(std::abs(total - 1.0) < 1e-9);
}

TEST_CASE("restricted candidates leave unreachable triples out entirely") {
  auto latent = latent_from_rows({{0.0}, {0.1}, {5.0}, {5.1}});
  GfnPolicy policy(2, 4, 1, 3);
  auto index = build_candidate_index(latent, 1);
  auto dist = enumerate_terminal_distribution(policy, index, latent);
  CHECK(dist.size() == 2 * 4 * 1);
  CHECK(dist.count(Triple{0, 0, 2}) == 0);  // 2 is not 0's nearest neighbour
  double total = 0.0;
  for (const auto& [triple, p] : dist) total += p;
  CHECK(std::abs(total - 1.0) < 1e-9);
}

TEST_CASE("enumeration matches Monte Carlo frequencies within 3 sigma") {
  auto inst = tiny_instance();
  GfnConfig cfg;
  cfg.epochs = 150;
  cfg.learning_rate = 0.05;
  cfg.knn_k = 5;
  cfg.batch = 8;
  cfg.seed = 11;
  auto trained = train_gflownet(inst.graph, inst.model, inst.latent, cfg);
  auto index = build_candidate_index(inst.latent, cfg.knn_k);
  auto dist = enumerate_terminal_distribution(trained.policy, index, inst.latent);

  Rng rng(77);
  const int n = 1000000;
  std::map<Triple, int> counts;
  for (int i = 0; i < n; ++i) {
    auto traj = sample_trajectory(trained.policy, index, inst.latent, rng);
    ++counts[Triple{traj.type(), traj.first(), traj.second()}];
  }
  for (const auto& [triple, p] : dist) {
    const double expected = n * p;
    const double sigma = std::sqrt(n * p * (1.0 - p));
    const double observed = counts.count(triple) ? counts.at(triple) : 0;
    CHECK(std::abs(observed - expected) <= 3.0 * sigma + 1.0);
  }
}

TEST_CASE("enumeration guard rejects oversized state spaces") {
  LatentState latent;
  latent.mu = Tensor({1200, 1});
  for (std::size_t i = 0; i < 1200; ++i) latent.mu.at(i, 0) = static_cast<double>(i);
  latent.z = latent.mu;
  latent.log_var = Tensor({1200, 1});
  GfnPolicy policy(2, 1200, 1, 3);
  auto index = build_candidate_index(latent, 600);
  CHECK_THROWS_AS(enumerate_terminal_distribution(policy, index, latent), ContractError);
}

TEST_CASE("zero training steps leave the policy unchanged") {
  auto inst = tiny_instance();
  GfnConfig cfg;
  cfg.epochs = 0;
  cfg.knn_k = 5;
  cfg.seed = 23;
  auto trained = train_gflownet(inst.graph, inst.model, inst.latent, cfg);
  GfnPolicy fresh(inst.model.type_count(), inst.model.drug_count(),
                  inst.model.latent_dim(), cfg.seed);
  for (std::size_t p = 0; p < fresh.parameters().size(); ++p)
    CHECK(trained.policy.parameters().items()[p].tensor ==
          fresh.parameters().items()[p].tensor);
}

TEST_CASE("trained policy approaches reward proportionality on the tiny instance") {
  auto inst = tiny_instance();
  GfnConfig cfg;
  cfg.epochs = 1500;
  cfg.learning_rate = 0.05;
  cfg.knn_k = 5;
  cfg.alpha = 1.0;
  cfg.batch = 16;
  cfg.seed = 11;
  auto trained = train_gflownet(inst.graph, inst.model, inst.latent, cfg);
  auto index = build_candidate_index(inst.latent, cfg.knn_k);
  auto dist = enumerate_terminal_distribution(trained.policy, index, inst.latent);

  const RewardConfig reward_cfg{cfg.alpha, cfg.reward_floor};
  std::map<Triple, double> target;
  double z = 0.0;
  for (const auto& [triple, p] : dist) {
    const double r = reward(triple.type, triple.first, triple.second,
                            inst.graph.type_counts(), inst.model, inst.latent,
                            reward_cfg);
    target[triple] = r;
    z += r;
  }
  for (auto& [triple, r] : target) r /= z;
  const double tv = total_variation(dist, target);
  CAPTURE(tv);
  CHECK(tv < 0.05);
  CHECK(std::abs(std::exp(trained.policy.log_partition()) - z) / z < 0.10);
}

TEST_CASE("reward scaling moves log Z by log c and leaves the distribution alone") {
  auto inst = tiny_instance();
  auto index = build_candidate_index(inst.latent, 5);
  const double c = 10.0;
  const RewardConfig reward_cfg{1.0, 1e-12};
  const auto counts = inst.graph.type_counts();

  auto train_scaled = [&](double scale) {
    GfnPolicy policy(inst.model.type_count(), inst.model.drug_count(),
                     inst.model.latent_dim(), 11);
    Rng rng(11);
    std::vector<TrajectoryRecord> batch;
    for (int step = 0; step < 1500; ++step) {
      batch.clear();
      for (int b = 0; b < 16; ++b) {
        auto traj = sample_trajectory(policy, index, inst.latent, rng);
        traj.reward = scale * reward(traj.type(), traj.first(), traj.second(), counts,
                                     inst.model, inst.latent, reward_cfg);
        traj.log_reward = std::log(traj.reward);
        batch.push_back(traj);
      }
      auto grads = tb_loss_with_gradients(policy, batch, index, inst.latent);
      gradient_step(policy.parameters(), grads.grads, 0.05);
    }
    return policy;
  };

  GfnPolicy base = train_scaled(1.0);
  GfnPolicy scaled = train_scaled(c);
  auto dist_base = enumerate_terminal_distribution(base, index, inst.latent);
  auto dist_scaled = enumerate_terminal_distribution(scaled, index, inst.latent);
  const double tv = total_variation(dist_base, dist_scaled);
  CAPTURE(tv);
  CHECK(tv < 0.05);
  const double shift = scaled.log_partition() - base.log_partition();
  CHECK(shift == doctest::Approx(std::log(c)).epsilon(0.10));
}

TEST_CASE("policy checkpoint round trip") {
  GfnPolicy policy(3, 5, 4, 17);
  auto meta = policy.meta();
  save_checkpoint(policy.parameters(), meta,
                  std::filesystem::temp_directory_path() / "flowddi_gfn_ckpt");
  auto loaded = GfnPolicy::from_checkpoint(
      load_checkpoint(std::filesystem::temp_directory_path() / "flowddi_gfn_ckpt"));
  CHECK(loaded.type_count() == 3);
  CHECK(loaded.drug_count() == 5);
  for (std::size_t p = 0; p < loaded.parameters().size(); ++p)
    CHECK(loaded.parameters().items()[p].tensor ==
          policy.parameters().items()[p].tensor);
}

}  // TEST_SUITE
