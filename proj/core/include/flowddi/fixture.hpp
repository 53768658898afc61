#pragma once

#include <cstdint>

#include "flowddi/graph.hpp"

namespace flowddi {

// Planted-structure generator standing in for a licensed interaction
// dataset. Drugs live in clusters; cluster pairs are apportioned to types
// with geometrically decaying frequencies, so each drug pair has a planted
// primary type (plus a deterministic secondary) that a decoder can learn
// while the imbalance stays controllable.
struct FixtureParams {
  std::size_t drugs = 50;
  std::size_t types = 8;
  std::size_t edges = 2000;
  double ratio = 0.5;  // geometric decay of type frequencies; 1 = uniform
  std::size_t clusters = 4;
  double primary_type_prob = 0.9;
  std::uint64_t seed = 1;

  void validate() const;
};

InteractionGraph make_fixture(const FixtureParams& params);

// Deterministic per-type target counts (largest-remainder apportionment of
// the geometric weights, every type granted at least one edge when
// possible). Exposed for generator checks.
std::vector<std::size_t> fixture_type_targets(const FixtureParams& params);

}  // namespace flowddi
