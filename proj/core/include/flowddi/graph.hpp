#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "flowddi/errors.hpp"

namespace flowddi {

using DrugIndex = std::uint32_t;
using TypeIndex = std::uint32_t;

// Undirected typed interaction, stored canonically with first < second.
struct Edge {
  DrugIndex first = 0;
  DrugIndex second = 0;
  TypeIndex type = 0;

  auto operator<=>(const Edge&) const = default;

  // Throws ValidationError on self-loops.
  static Edge canonical(DrugIndex a, DrugIndex b, TypeIndex t);
};

// Immutable multi-relational interaction graph: dense drug/type
// vocabularies, a duplicate-free canonical edge set, and per-type counts.
// Safe to share across threads once constructed.
class InteractionGraph {
 public:
  InteractionGraph(std::vector<std::string> drug_labels,
                   std::vector<std::string> type_labels,
                   std::vector<Edge> edges);

  std::size_t drug_count() const { return drug_labels_.size(); }
  std::size_t type_count() const { return type_labels_.size(); }
  const std::vector<std::string>& drug_labels() const { return drug_labels_; }
  const std::vector<std::string>& type_labels() const { return type_labels_; }

  // Sorted in canonical order.
  const std::vector<Edge>& edges() const { return edges_; }
  std::size_t edge_count() const { return edges_.size(); }

  // Indexed by TypeIndex; types without edges count 0.
  const std::vector<std::size_t>& type_counts() const { return type_counts_; }

  bool contains(const Edge& e) const;
  // True when the pair (i, j) carries no interaction of any type.
  bool pair_unconnected(DrugIndex a, DrugIndex b) const;

  std::optional<DrugIndex> find_drug(std::string_view label) const;
  std::optional<TypeIndex> find_type(std::string_view label) const;

  // Same-vocabulary comparison for merge/split contracts.
  bool same_vocabulary(const InteractionGraph& other) const;
  std::uint64_t vocabulary_hash() const;

 private:
  std::vector<std::string> drug_labels_;
  std::vector<std::string> type_labels_;
  std::vector<Edge> edges_;
  std::vector<std::size_t> type_counts_;
  std::map<std::string, DrugIndex, std::less<>> drug_index_;
  std::map<std::string, TypeIndex, std::less<>> type_index_;
};

// Exact per-type tally; equal to g.type_counts() by construction.
std::vector<std::size_t> type_frequencies(const InteractionGraph& g);

struct DatasetSplit {
  InteractionGraph train;
  InteractionGraph valid;
  InteractionGraph test;
};

struct SplitFractions {
  double train = 0.6;
  double valid = 0.2;
  double test = 0.2;
};

// Stratified by type when a type has >= 3 edges; smaller types go whole
// into train. Deterministic for a fixed seed.
DatasetSplit split_edges(const InteractionGraph& g, SplitFractions fractions,
                         std::uint64_t seed);

enum class EdgeListFormat { kAuto, kTsv, kCsv };

struct IngestResult {
  InteractionGraph graph;
  std::size_t duplicate_rows_dropped = 0;
};

// Header-bearing delimited text with columns (drug_a, drug_b, type).
// Indices are assigned in first-seen order; duplicate canonical triples are
// dropped and counted.
IngestResult ingest_edge_list(std::istream& source,
                              EdgeListFormat format = EdgeListFormat::kAuto);
IngestResult ingest_edge_list_file(const std::filesystem::path& path,
                                   EdgeListFormat format = EdgeListFormat::kAuto);

struct Vocabulary {
  std::vector<std::string> drug_labels;
  std::vector<std::string> type_labels;
};

// Ingest against a fixed vocabulary so indices survive a round trip; labels
// absent from the vocabulary are validation errors. Zero-edge inputs are
// permitted here (the vocabulary carries the graph shape).
IngestResult ingest_edge_list_file(const std::filesystem::path& path,
                                   const Vocabulary& vocab,
                                   EdgeListFormat format = EdgeListFormat::kAuto);

Vocabulary read_vocabulary(const std::filesystem::path& path);
void write_vocabulary(const InteractionGraph& g, const std::filesystem::path& path);
void write_edge_list(const InteractionGraph& g, const std::filesystem::path& path);

}  // namespace flowddi
