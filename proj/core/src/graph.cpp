#include "flowddi/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "flowddi/rng.hpp"

namespace flowddi {

namespace {

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_fields(const std::string& line, char delim) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, delim)) fields.push_back(trim(field));
  if (!line.empty() && line.back() == delim) fields.push_back("");
  return fields;
}

std::uint64_t fnv1a(std::uint64_t h, std::string_view s) {
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace

Edge Edge::canonical(DrugIndex a, DrugIndex b, TypeIndex t) {
  if (a == b)
    throw ValidationError("self-loop edge on drug index " + std::to_string(a));
  return Edge{std::min(a, b), std::max(a, b), t};
}

InteractionGraph::InteractionGraph(std::vector<std::string> drug_labels,
                                   std::vector<std::string> type_labels,
                                   std::vector<Edge> edges)
    : drug_labels_(std::move(drug_labels)),
      type_labels_(std::move(type_labels)),
      edges_(std::move(edges)) {
  for (DrugIndex i = 0; i < drug_labels_.size(); ++i) {
    if (!drug_index_.emplace(drug_labels_[i], i).second)
      throw ValidationError("duplicate drug label: " + drug_labels_[i]);
  }
  for (TypeIndex i = 0; i < type_labels_.size(); ++i) {
    if (!type_index_.emplace(type_labels_[i], i).second)
      throw ValidationError("duplicate type label: " + type_labels_[i]);
  }
  for (Edge& e : edges_) {
    if (e.first >= drug_count() || e.second >= drug_count())
      throw ValidationError("edge references drug index out of range");
    if (e.type >= type_count())
      throw ValidationError("edge references type index out of range");
    e = Edge::canonical(e.first, e.second, e.type);
  }
  std::sort(edges_.begin(), edges_.end());
  if (std::adjacent_find(edges_.begin(), edges_.end()) != edges_.end())
    throw ValidationError("duplicate edge triple in graph");
  type_counts_.assign(type_count(), 0);
  for (const Edge& e : edges_) ++type_counts_[e.type];
}

bool InteractionGraph::contains(const Edge& e) const {
  return std::binary_search(edges_.begin(), edges_.end(), e);
}

bool InteractionGraph::pair_unconnected(DrugIndex a, DrugIndex b) const {
  const DrugIndex lo = std::min(a, b), hi = std::max(a, b);
  auto it = std::lower_bound(edges_.begin(), edges_.end(), Edge{lo, hi, 0});
  return it == edges_.end() || it->first != lo || it->second != hi;
}

std::optional<DrugIndex> InteractionGraph::find_drug(std::string_view label) const {
  auto it = drug_index_.find(label);
  if (it == drug_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<TypeIndex> InteractionGraph::find_type(std::string_view label) const {
  auto it = type_index_.find(label);
  if (it == type_index_.end()) return std::nullopt;
  return it->second;
}

bool InteractionGraph::same_vocabulary(const InteractionGraph& other) const {
  return drug_labels_ == other.drug_labels_ && type_labels_ == other.type_labels_;
}

std::uint64_t InteractionGraph::vocabulary_hash() const {
  std::uint64_t h = 1469598103934665603ull;
  for (const auto& label : drug_labels_) h = fnv1a(fnv1a(h, label), "\x1f");
  h = fnv1a(h, "\x1e");
  for (const auto& label : type_labels_) h = fnv1a(fnv1a(h, label), "\x1f");
  return h;
}

std::vector<std::size_t> type_frequencies(const InteractionGraph& g) {
  std::vector<std::size_t> counts(g.type_count(), 0);
  for (const Edge& e : g.edges()) ++counts[e.type];
  return counts;
}

DatasetSplit split_edges(const InteractionGraph& g, SplitFractions fractions,
                         std::uint64_t seed) {
  const double parts[3] = {fractions.train, fractions.valid, fractions.test};
  for (double f : parts)
    if (f <= 0.0) throw ContractError("split fractions must be positive");
  if (std::abs(parts[0] + parts[1] + parts[2] - 1.0) > 1e-9)
    throw ContractError("split fractions must sum to 1");
  if (g.edge_count() == 0)
    throw ValidationError("cannot split a graph with zero edges");

  std::vector<std::vector<Edge>> by_type(g.type_count());
  for (const Edge& e : g.edges()) by_type[e.type].push_back(e);

  Rng rng(seed);
  std::vector<Edge> train, valid, test;
  for (TypeIndex t = 0; t < g.type_count(); ++t) {
    auto& pool = by_type[t];
    if (pool.empty()) continue;
    if (pool.size() < 3) {
      train.insert(train.end(), pool.begin(), pool.end());
      continue;
    }
    for (std::size_t i = pool.size(); i > 1; --i)
      std::swap(pool[i - 1], pool[rng.index(i)]);

    // Largest-remainder apportionment; ties resolve train, valid, test.
    const std::size_t n = pool.size();
    std::size_t counts[3];
    double remainders[3];
    std::size_t assigned = 0;
    for (int p = 0; p < 3; ++p) {
      const double quota = static_cast<double>(n) * parts[p];
      counts[p] = static_cast<std::size_t>(quota);
      remainders[p] = quota - static_cast<double>(counts[p]);
      assigned += counts[p];
    }
    int order[3] = {0, 1, 2};
    std::stable_sort(order, order + 3,
                     [&](int a, int b) { return remainders[a] > remainders[b]; });
    for (std::size_t leftover = n - assigned, i = 0; i < leftover; ++i)
      ++counts[order[i]];

    auto it = pool.begin();
    train.insert(train.end(), it, it + counts[0]);
    it += counts[0];
    valid.insert(valid.end(), it, it + counts[1]);
    it += counts[1];
    test.insert(test.end(), it, it + counts[2]);
  }

  return DatasetSplit{
      InteractionGraph(g.drug_labels(), g.type_labels(), std::move(train)),
      InteractionGraph(g.drug_labels(), g.type_labels(), std::move(valid)),
      InteractionGraph(g.drug_labels(), g.type_labels(), std::move(test))};
}

namespace {

struct RawRow {
  std::string drug_a;
  std::string drug_b;
  std::string type;
  std::size_t line;
};

std::vector<RawRow> parse_rows(std::istream& source, EdgeListFormat format) {
  std::string line;
  std::size_t line_no = 0;
  char delim = '\t';
  bool header_seen = false;
  std::vector<RawRow> rows;
  while (std::getline(source, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    if (!header_seen) {
      switch (format) {
        case EdgeListFormat::kTsv: delim = '\t'; break;
        case EdgeListFormat::kCsv: delim = ','; break;
        case EdgeListFormat::kAuto:
          delim = line.find('\t') != std::string::npos ? '\t' : ',';
          break;
      }
      if (split_fields(line, delim).size() != 3)
        throw ParseError("line " + std::to_string(line_no) +
                         ": header must have 3 columns (drug_a, drug_b, type)");
      header_seen = true;
      continue;
    }
    auto fields = split_fields(line, delim);
    if (fields.size() != 3)
      throw ParseError("line " + std::to_string(line_no) + ": expected 3 columns, got " +
                       std::to_string(fields.size()));
    for (const auto& f : fields)
      if (f.empty())
        throw ParseError("line " + std::to_string(line_no) + ": empty field");
    if (fields[0] == fields[1])
      throw ValidationError("line " + std::to_string(line_no) + ": self-loop on drug '" +
                            fields[0] + "'");
    rows.push_back(RawRow{fields[0], fields[1], fields[2], line_no});
  }
  if (!header_seen) throw ValidationError("empty input: no header line");
  return rows;
}

IngestResult build_graph(const std::vector<RawRow>& rows,
                         std::vector<std::string> drug_labels,
                         std::vector<std::string> type_labels, bool fixed_vocab) {
  std::map<std::string, DrugIndex, std::less<>> drug_index;
  std::map<std::string, TypeIndex, std::less<>> type_index;
  for (DrugIndex i = 0; i < drug_labels.size(); ++i) drug_index.emplace(drug_labels[i], i);
  for (TypeIndex i = 0; i < type_labels.size(); ++i) type_index.emplace(type_labels[i], i);

  auto drug_of = [&](const std::string& label, std::size_t line) -> DrugIndex {
    auto it = drug_index.find(label);
    if (it != drug_index.end()) return it->second;
    if (fixed_vocab)
      throw ValidationError("line " + std::to_string(line) +
                            ": drug label not in vocabulary: " + label);
    const DrugIndex idx = static_cast<DrugIndex>(drug_labels.size());
    drug_labels.push_back(label);
    drug_index.emplace(label, idx);
    return idx;
  };
  auto type_of = [&](const std::string& label, std::size_t line) -> TypeIndex {
    auto it = type_index.find(label);
    if (it != type_index.end()) return it->second;
    if (fixed_vocab)
      throw ValidationError("line " + std::to_string(line) +
                            ": type label not in vocabulary: " + label);
    const TypeIndex idx = static_cast<TypeIndex>(type_labels.size());
    type_labels.push_back(label);
    type_index.emplace(label, idx);
    return idx;
  };

  std::vector<Edge> edges;
  std::size_t duplicates = 0;
  std::vector<Edge> seen;
  for (const RawRow& row : rows) {
    const DrugIndex a = drug_of(row.drug_a, row.line);
    const DrugIndex b = drug_of(row.drug_b, row.line);
    const TypeIndex t = type_of(row.type, row.line);
    edges.push_back(Edge::canonical(a, b, t));
  }
  std::sort(edges.begin(), edges.end());
  auto last = std::unique(edges.begin(), edges.end());
  duplicates = static_cast<std::size_t>(std::distance(last, edges.end()));
  edges.erase(last, edges.end());

  return IngestResult{
      InteractionGraph(std::move(drug_labels), std::move(type_labels), std::move(edges)),
      duplicates};
}

}  // namespace

IngestResult ingest_edge_list(std::istream& source, EdgeListFormat format) {
  auto rows = parse_rows(source, format);
  if (rows.empty()) throw ValidationError("empty input: no edge rows");
  return build_graph(rows, {}, {}, /*fixed_vocab=*/false);
}

IngestResult ingest_edge_list_file(const std::filesystem::path& path,
                                   EdgeListFormat format) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open edge list: " + path.string());
  return ingest_edge_list(in, format);
}

IngestResult ingest_edge_list_file(const std::filesystem::path& path,
                                   const Vocabulary& vocab, EdgeListFormat format) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open edge list: " + path.string());
  auto rows = parse_rows(in, format);
  return build_graph(rows, vocab.drug_labels, vocab.type_labels, /*fixed_vocab=*/true);
}

Vocabulary read_vocabulary(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open vocabulary: " + path.string());
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  std::vector<std::pair<std::size_t, std::string>> drugs, types;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split_fields(line, '\t');
    if (fields.size() != 3)
      throw ParseError("vocabulary line " + std::to_string(line_no) +
                       ": expected 3 columns (kind, label, index)");
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    std::size_t index = 0;
    try {
      index = std::stoul(fields[2]);
    } catch (const std::exception&) {
      throw ParseError("vocabulary line " + std::to_string(line_no) + ": bad index '" +
                       fields[2] + "'");
    }
    if (fields[0] == "drug")
      drugs.emplace_back(index, fields[1]);
    else if (fields[0] == "type")
      types.emplace_back(index, fields[1]);
    else
      throw ParseError("vocabulary line " + std::to_string(line_no) + ": unknown kind '" +
                       fields[0] + "'");
  }
  auto to_dense = [](std::vector<std::pair<std::size_t, std::string>>& entries,
                     const char* kind) {
    std::sort(entries.begin(), entries.end());
    std::vector<std::string> labels;
    labels.reserve(entries.size());
    for (std::size_t i = 0; i < entries.size(); ++i) {
      if (entries[i].first != i)
        throw ValidationError(std::string("vocabulary ") + kind +
                              " indices are not dense");
      labels.push_back(std::move(entries[i].second));
    }
    return labels;
  };
  return Vocabulary{to_dense(drugs, "drug"), to_dense(types, "type")};
}

void write_vocabulary(const InteractionGraph& g, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write vocabulary: " + path.string());
  out << "kind\tlabel\tindex\n";
  for (DrugIndex i = 0; i < g.drug_count(); ++i)
    out << "drug\t" << g.drug_labels()[i] << "\t" << i << "\n";
  for (TypeIndex i = 0; i < g.type_count(); ++i)
    out << "type\t" << g.type_labels()[i] << "\t" << i << "\n";
}

void write_edge_list(const InteractionGraph& g, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write edge list: " + path.string());
  out << "drug_a\tdrug_b\ttype\n";
  for (const Edge& e : g.edges())
    out << g.drug_labels()[e.first] << "\t" << g.drug_labels()[e.second] << "\t"
        << g.type_labels()[e.type] << "\n";
}

}  // namespace flowddi
