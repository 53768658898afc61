#include <doctest.h>

#include <sstream>

#include "flowddi/graph.hpp"
#include "flowddi/rng.hpp"
#include "test_util.hpp"

using namespace flowddi;

namespace {

IngestResult ingest(const std::string& text) {
  std::istringstream in(text);
  return ingest_edge_list(in);
}

}  // namespace

TEST_SUITE("graph") {

TEST_CASE("ingest assigns dense first-seen indices and tallies types") {
  auto result = ingest(
      "drug_a\tdrug_b\ttype\n"
      "A\tB\tt1\n"
      "A\tC\tt1\n"
      "B\tC\tt2\n");
  const auto& g = result.graph;
  CHECK(g.drug_count() == 3);
  CHECK(g.type_count() == 2);
  CHECK(g.edge_count() == 3);
  CHECK(g.drug_labels() == std::vector<std::string>{"A", "B", "C"});
  CHECK(g.type_counts() == std::vector<std::size_t>{2, 1});
  CHECK(result.duplicate_rows_dropped == 0);
}

TEST_CASE("symmetric rows canonicalize to one edge with a counted warning") {
  auto result = ingest(
      "drug_a\tdrug_b\ttype\n"
      "A\tB\tt1\n"
      "B\tA\tt1\n");
  CHECK(result.graph.edge_count() == 1);
  CHECK(result.duplicate_rows_dropped == 1);
}

TEST_CASE("self-loops, empty input and malformed rows are rejected") {
  CHECK_THROWS_AS(ingest("drug_a\tdrug_b\ttype\nA\tA\tt1\n"), ValidationError);
  CHECK_THROWS_AS(ingest("drug_a\tdrug_b\ttype\n"), ValidationError);
  CHECK_THROWS_AS(ingest(""), ValidationError);
  CHECK_THROWS_WITH_AS(ingest("drug_a\tdrug_b\ttype\nA\tB\n"),
                       doctest::Contains("line 2"), ParseError);
}

TEST_CASE("comma delimiter is auto-detected from the header") {
  auto result = ingest("drug_a,drug_b,type\nA,B,t1\n");
  CHECK(result.graph.edge_count() == 1);
  CHECK(result.graph.find_type("t1").has_value());
}

TEST_CASE("multiple types per pair are permitted") {
  auto result = ingest(
      "drug_a\tdrug_b\ttype\n"
      "A\tB\tt1\n"
      "A\tB\tt2\n");
  CHECK(result.graph.edge_count() == 2);
}

TEST_CASE("type_frequencies covers zero-count types and sums to edge count") {
  InteractionGraph g({"a", "b", "c"}, {"x", "y", "z"},
                     {Edge{0, 1, 0}, Edge{0, 2, 0}, Edge{1, 2, 1}});
  auto freq = type_frequencies(g);
  CHECK(freq == std::vector<std::size_t>{2, 1, 0});
  std::size_t total = 0;
  for (auto c : freq) total += c;
  CHECK(total == g.edge_count());
}

TEST_CASE("split is exact for one type with round fractions") {
  std::vector<Edge> edges;
  std::vector<std::string> drugs;
  for (int i = 0; i < 101; ++i) drugs.push_back("d" + std::to_string(i));
  for (std::uint32_t i = 0; i < 100; ++i)
    edges.push_back(Edge{i, static_cast<DrugIndex>(i + 1), 0});
  InteractionGraph g(drugs, {"t"}, edges);
  auto split = split_edges(g, SplitFractions{0.6, 0.2, 0.2}, 7);
  CHECK(split.train.edge_count() == 60);
  CHECK(split.valid.edge_count() == 20);
  CHECK(split.test.edge_count() == 20);
}

TEST_CASE("types with fewer than 3 edges land whole in train") {
  InteractionGraph g({"a", "b", "c", "d"}, {"x", "y"},
                     {Edge{0, 1, 0}, Edge{0, 2, 0}, Edge{0, 3, 0}, Edge{1, 2, 0},
                      Edge{1, 3, 1}, Edge{2, 3, 1}});
  auto split = split_edges(g, SplitFractions{0.4, 0.3, 0.3}, 3);
  std::size_t y_in_train = 0;
  for (const Edge& e : split.train.edges())
    if (e.type == 1) ++y_in_train;
  CHECK(y_in_train == 2);
  CHECK(split.valid.type_counts()[1] == 0);
  CHECK(split.test.type_counts()[1] == 0);
}

TEST_CASE("split is deterministic and partitions the edge set") {
  Rng rng(5);
  std::vector<std::string> drugs;
  for (int i = 0; i < 30; ++i) drugs.push_back("d" + std::to_string(i));
  std::vector<Edge> edges;
  for (std::uint32_t a = 0; a < 30; ++a)
    for (std::uint32_t b = a + 1; b < 30; ++b)
      if (rng.uniform() < 0.3)
        edges.push_back(Edge{a, b, static_cast<TypeIndex>(rng.index(4))});
  InteractionGraph g(drugs, {"t0", "t1", "t2", "t3"}, edges);

  auto s1 = split_edges(g, SplitFractions{}, 11);
  auto s2 = split_edges(g, SplitFractions{}, 11);
  CHECK(s1.train.edges() == s2.train.edges());
  CHECK(s1.valid.edges() == s2.valid.edges());
  CHECK(s1.test.edges() == s2.test.edges());

  std::vector<Edge> merged = s1.train.edges();
  merged.insert(merged.end(), s1.valid.edges().begin(), s1.valid.edges().end());
  merged.insert(merged.end(), s1.test.edges().begin(), s1.test.edges().end());
  std::sort(merged.begin(), merged.end());
  CHECK(merged == g.edges());
}

TEST_CASE("split rejects bad fractions and empty graphs") {
  InteractionGraph g({"a", "b"}, {"t"}, {Edge{0, 1, 0}});
  CHECK_THROWS_AS(split_edges(g, SplitFractions{0.5, 0.5, 0.5}, 1), ContractError);
  CHECK_THROWS_AS(split_edges(g, SplitFractions{0.8, -0.2, 0.4}, 1), ContractError);
  InteractionGraph empty({"a", "b"}, {"t"}, {});
  CHECK_THROWS_AS(split_edges(empty, SplitFractions{}, 1), ValidationError);
}

TEST_CASE("serialization round trip reproduces the graph exactly") {
  testutil::TempDir dir("graph");
  auto result = ingest(
      "drug_a\tdrug_b\ttype\n"
      "B\tA\tt2\n"
      "C\tA\tt1\n"
      "B\tC\tt2\n");
  const auto& g = result.graph;
  write_edge_list(g, dir.path() / "edges.tsv");
  write_vocabulary(g, dir.path() / "vocab.tsv");

  auto vocab = read_vocabulary(dir.path() / "vocab.tsv");
  auto round = ingest_edge_list_file(dir.path() / "edges.tsv", vocab);
  CHECK(round.duplicate_rows_dropped == 0);
  CHECK(round.graph.drug_labels() == g.drug_labels());
  CHECK(round.graph.type_labels() == g.type_labels());
  CHECK(round.graph.edges() == g.edges());

  // Idempotence: serializing the round-tripped graph yields identical bytes.
  write_edge_list(round.graph, dir.path() / "edges2.tsv");
  CHECK(testutil::read_file(dir.path() / "edges.tsv") ==
        testutil::read_file(dir.path() / "edges2.tsv"));
}

TEST_CASE("fixed-vocabulary ingest rejects unknown labels") {
  testutil::TempDir dir("graph_vocab");
  testutil::write_file(dir.path() / "edges.tsv", "drug_a\tdrug_b\ttype\nA\tZ\tt1\n");
  Vocabulary vocab{{"A", "B"}, {"t1"}};
  CHECK_THROWS_AS(ingest_edge_list_file(dir.path() / "edges.tsv", vocab),
                  ValidationError);
}

TEST_CASE("duplicate labels and out-of-range edges are rejected") {
  CHECK_THROWS_AS(InteractionGraph({"a", "a"}, {"t"}, {}), ValidationError);
  CHECK_THROWS_AS(InteractionGraph({"a", "b"}, {"t"}, {Edge{0, 5, 0}}), ValidationError);
  CHECK_THROWS_AS(InteractionGraph({"a", "b"}, {"t"}, {Edge{0, 1, 0}, Edge{1, 0, 0}}),
                  ValidationError);
}

}  // TEST_SUITE
