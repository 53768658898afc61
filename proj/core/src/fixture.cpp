#include "flowddi/fixture.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "flowddi/rng.hpp"

namespace flowddi {

void FixtureParams::validate() const {
  if (drugs < 4) throw ContractError("fixture requires at least 4 drugs");
  if (types < 2) throw ContractError("fixture requires at least 2 types");
  if (edges == 0) throw ContractError("fixture requires at least 1 edge");
  if (!(ratio > 0.0 && ratio <= 1.0)) throw ContractError("ratio must lie in (0, 1]");
  if (clusters == 0 || clusters > drugs)
    throw ContractError("clusters must lie in [1, drugs]");
  if (primary_type_prob < 0.0 || primary_type_prob > 1.0)
    throw ContractError("primary_type_prob must lie in [0, 1]");
  const std::size_t pair_capacity = drugs * (drugs - 1) / 2;
  if (edges > pair_capacity * types)
    throw ContractError("fixture parameters infeasible: too many edges requested");
}

namespace {

std::vector<std::size_t> apportion(std::span<const double> weights, std::size_t total) {
  double weight_sum = 0.0;
  for (double w : weights) weight_sum += w;
  std::vector<std::size_t> counts(weights.size(), 0);
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double quota = static_cast<double>(total) * weights[i] / weight_sum;
    counts[i] = static_cast<std::size_t>(quota);
    remainders.emplace_back(quota - static_cast<double>(counts[i]), i);
    assigned += counts[i];
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t leftover = total - assigned, i = 0; i < leftover; ++i)
    ++counts[remainders[i].second];
  return counts;
}

std::vector<double> geometric_weights(double ratio, std::size_t types) {
  std::vector<double> weights(types);
  for (std::size_t t = 0; t < types; ++t)
    weights[t] = std::pow(ratio, static_cast<double>(t));
  return weights;
}

}  // namespace

std::vector<std::size_t> fixture_type_targets(const FixtureParams& params) {
  params.validate();
  const auto weights = geometric_weights(params.ratio, params.types);
  auto counts = apportion(weights, params.edges);
  // Give every type presence when the budget allows, taking from the head.
  if (params.edges >= params.types) {
    for (std::size_t t = 0; t < params.types; ++t) {
      while (counts[t] == 0) {
        auto head = std::max_element(counts.begin(), counts.end());
        --(*head);
        ++counts[t];
      }
    }
  }
  return counts;
}

InteractionGraph make_fixture(const FixtureParams& params) {
  const auto targets = fixture_type_targets(params);
  const std::size_t n = params.drugs;
  const std::size_t c = params.clusters;
  const std::size_t types = params.types;

  // Cluster pairs (canonical, including same-cluster) are apportioned to
  // types by the same geometric weights, so each pair of drugs has one
  // planted primary type determined by its clusters. A deterministic
  // per-pair secondary type keeps multi-typed pairs consistent.
  const std::size_t cluster_pairs = c * (c + 1) / 2;
  auto pairs_per_type = apportion(geometric_weights(params.ratio, types), cluster_pairs);
  // Every type needs a cluster-pair of its own or its edges would be pure
  // noise; the head types spill into secondary picks instead.
  if (cluster_pairs >= types) {
    for (std::size_t t = 0; t < types; ++t) {
      while (pairs_per_type[t] == 0) {
        auto head = std::max_element(pairs_per_type.begin(), pairs_per_type.end());
        --(*head);
        ++pairs_per_type[t];
      }
    }
  }
  std::vector<TypeIndex> primary_of_cluster_pair;
  primary_of_cluster_pair.reserve(cluster_pairs);
  for (std::size_t t = 0; t < types; ++t)
    for (std::size_t k = 0; k < pairs_per_type[t]; ++k)
      primary_of_cluster_pair.push_back(static_cast<TypeIndex>(t));

  auto cluster_of = [&](DrugIndex d) { return static_cast<std::size_t>(d) % c; };
  auto cluster_pair_id = [&](std::size_t ca, std::size_t cb) {
    const std::size_t lo = std::min(ca, cb), hi = std::max(ca, cb);
    // Index into the upper triangle (including the diagonal).
    return lo * c - lo * (lo + 1) / 2 + hi;
  };
  auto primary_type = [&](DrugIndex a, DrugIndex b) {
    return primary_of_cluster_pair[cluster_pair_id(cluster_of(a), cluster_of(b))];
  };
  auto secondary_type = [&](DrugIndex a, DrugIndex b) {
    const TypeIndex p = primary_type(a, b);
    if (types == 1) return p;
    return static_cast<TypeIndex>(
        (p + 1 + (static_cast<std::size_t>(a) + static_cast<std::size_t>(b)) %
                     (types - 1)) %
        types);
  };

  Rng rng(params.seed);
  auto random_pair = [&]() -> std::pair<DrugIndex, DrugIndex> {
    while (true) {
      const auto a = static_cast<DrugIndex>(rng.index(n));
      const auto b = static_cast<DrugIndex>(rng.index(n));
      if (a != b) return {std::min(a, b), std::max(a, b)};
    }
  };

  std::set<Edge> edges;
  for (std::size_t t = 0; t < types; ++t) {
    std::size_t made = 0;
    std::size_t attempts = 0;
    const std::size_t attempt_budget = 2000 * targets[t] + 100000;
    while (made < targets[t]) {
      if (++attempts > attempt_budget)
        throw ContractError("fixture parameters infeasible: sampling budget exhausted");
      const auto [a, b] = random_pair();
      const bool want_primary = rng.uniform() < params.primary_type_prob;
      const TypeIndex planted = want_primary ? primary_type(a, b) : secondary_type(a, b);
      // Late in a type's budget the planted pool can be exhausted; fall
      // back to any free pair so the marginal counts stay exact.
      const bool saturated = attempts > 100 * targets[t] + 1000;
      if (planted != static_cast<TypeIndex>(t) && !saturated) continue;
      if (edges.insert(Edge::canonical(a, b, static_cast<TypeIndex>(t))).second) ++made;
    }
  }

  int drug_width = 1;
  for (std::size_t v = n - 1; v >= 10; v /= 10) ++drug_width;
  std::vector<std::string> drug_labels, type_labels;
  drug_labels.reserve(n);
  for (std::size_t d = 0; d < n; ++d) {
    std::string num = std::to_string(d);
    drug_labels.push_back("d" + std::string(drug_width - num.size(), '0') + num);
  }
  for (std::size_t t = 0; t < types; ++t)
    type_labels.push_back("t" + std::to_string(t));

  return InteractionGraph(std::move(drug_labels), std::move(type_labels),
                          {edges.begin(), edges.end()});
}

}  // namespace flowddi
