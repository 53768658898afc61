#include "flowddi/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>

#include <nlohmann/json.hpp>

namespace flowddi {

using ordered_json = nlohmann::ordered_json;

namespace {

constexpr double kSumTolerance = 1e-9;

double log2_safe(double x) { return std::log2(x); }

}  // namespace

Distribution::Distribution(std::vector<double> p) : p_(std::move(p)) {
  if (p_.empty()) throw ContractError("distribution must be nonempty");
  double total = 0.0;
  for (double v : p_) {
    if (!(v >= 0.0)) throw ContractError("distribution entries must be nonnegative");
    total += v;
  }
  if (std::abs(total - 1.0) > kSumTolerance)
    throw ContractError("distribution must sum to 1");
}

Distribution Distribution::from_counts(std::span<const std::size_t> counts) {
  if (counts.empty()) throw ContractError("distribution must be nonempty");
  double total = 0.0;
  for (std::size_t c : counts) total += static_cast<double>(c);
  if (total == 0.0) throw ContractError("cannot normalize all-zero counts");
  std::vector<double> p(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i)
    p[i] = static_cast<double>(counts[i]) / total;
  return Distribution(std::move(p));
}

double shannon_entropy(const Distribution& p) {
  double h = 0.0;
  for (double v : p.values())
    if (v > 0.0) h -= v * log2_safe(v);
  return h;
}

double jensen_shannon_divergence(const Distribution& p, const Distribution& q) {
  if (p.size() != q.size())
    throw ContractError("jensen_shannon_divergence requires equal-length distributions");
  double jsd = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double m = 0.5 * (p[i] + q[i]);
    if (p[i] > 0.0) jsd += 0.5 * p[i] * log2_safe(p[i] / m);
    if (q[i] > 0.0) jsd += 0.5 * q[i] * log2_safe(q[i] / m);
  }
  return std::max(jsd, 0.0);
}

double coverage(std::span<const std::size_t> counts_per_type, std::size_t m) {
  if (counts_per_type.empty()) throw ContractError("coverage requires a nonempty vocabulary");
  if (m == 0) throw ContractError("coverage threshold m must be >= 1");
  std::size_t present = 0;
  for (std::size_t c : counts_per_type)
    if (c >= m) ++present;
  return static_cast<double>(present) / static_cast<double>(counts_per_type.size());
}

namespace {

void require_binary_examples(std::span<const double> pos, std::span<const double> neg,
                             const char* metric) {
  if (pos.empty() || neg.empty())
    throw ContractError(std::string(metric) +
                        " requires at least one positive and one negative example");
}

}  // namespace

double auroc(std::span<const double> positive_scores,
             std::span<const double> negative_scores) {
  require_binary_examples(positive_scores, negative_scores, "auroc");
  struct Item {
    double score;
    bool positive;
  };
  std::vector<Item> items;
  items.reserve(positive_scores.size() + negative_scores.size());
  for (double s : positive_scores) items.push_back({s, true});
  for (double s : negative_scores) items.push_back({s, false});
  std::sort(items.begin(), items.end(),
            [](const Item& a, const Item& b) { return a.score < b.score; });

  // Average ranks within tie groups; equivalent to counting tied
  // positive-negative pairs as half wins.
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < items.size()) {
    std::size_t j = i;
    while (j < items.size() && items[j].score == items[i].score) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // 1-based
    for (std::size_t k = i; k < j; ++k)
      if (items[k].positive) rank_sum_pos += avg_rank;
    i = j;
  }
  const double np = static_cast<double>(positive_scores.size());
  const double nn = static_cast<double>(negative_scores.size());
  return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);
}

double auprc(std::span<const double> positive_scores,
             std::span<const double> negative_scores) {
  require_binary_examples(positive_scores, negative_scores, "auprc");
  struct Item {
    double score;
    bool positive;
  };
  std::vector<Item> items;
  items.reserve(positive_scores.size() + negative_scores.size());
  for (double s : positive_scores) items.push_back({s, true});
  for (double s : negative_scores) items.push_back({s, false});
  std::sort(items.begin(), items.end(),
            [](const Item& a, const Item& b) { return a.score > b.score; });

  const double np = static_cast<double>(positive_scores.size());
  double area = 0.0;
  double recall_prev = 0.0;
  std::size_t tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < items.size()) {
    std::size_t j = i;
    while (j < items.size() && items[j].score == items[i].score) ++j;
    for (std::size_t k = i; k < j; ++k) (items[k].positive ? tp : fp) += 1;
    const double recall = static_cast<double>(tp) / np;
    const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    area += (recall - recall_prev) * precision;
    recall_prev = recall;
    i = j;
  }
  return area;
}

ClassificationReport classification_metrics(
    const std::vector<std::vector<double>>& scores, std::span<const TypeIndex> labels,
    const std::vector<std::vector<double>>& negatives) {
  if (scores.empty())
    throw ContractError("accuracy requires at least one scored example");
  if (scores.size() != labels.size())
    throw ContractError("score and label counts differ");
  const std::size_t types = scores.front().size();
  if (types == 0) throw ContractError("score vectors must be nonempty");

  ClassificationReport report;
  report.per_type.assign(types, PerTypeStats{});

  std::vector<double> pos_binary, neg_binary;
  pos_binary.reserve(scores.size());
  std::size_t correct_total = 0;
  for (std::size_t e = 0; e < scores.size(); ++e) {
    const auto& row = scores[e];
    if (row.size() != types) throw ContractError("inconsistent score vector length");
    if (labels[e] >= types) throw ContractError("label out of range");
    std::size_t argmax = 0;
    for (std::size_t t = 1; t < types; ++t)
      if (row[t] > row[argmax]) argmax = t;
    pos_binary.push_back(row[argmax]);
    ++report.per_type[labels[e]].support;
    ++report.per_type[argmax].predicted;
    if (argmax == labels[e]) {
      ++report.per_type[argmax].correct;
      ++correct_total;
    }
  }
  for (const auto& row : negatives) {
    if (row.size() != types) throw ContractError("inconsistent score vector length");
    neg_binary.push_back(*std::max_element(row.begin(), row.end()));
  }

  report.accuracy = static_cast<double>(correct_total) / static_cast<double>(scores.size());
  report.micro_f1 = report.accuracy;  // single-label micro-F1 reduces to accuracy

  double macro_sum = 0.0;
  std::size_t macro_n = 0;
  for (auto& s : report.per_type) {
    s.precision = s.predicted > 0
                      ? static_cast<double>(s.correct) / static_cast<double>(s.predicted)
                      : 0.0;
    s.recall = s.support > 0
                   ? static_cast<double>(s.correct) / static_cast<double>(s.support)
                   : 0.0;
    s.f1 = (s.precision + s.recall) > 0.0
               ? 2.0 * s.precision * s.recall / (s.precision + s.recall)
               : 0.0;
    if (s.support > 0) {
      macro_sum += s.f1;
      ++macro_n;
    }
  }
  report.macro_f1 = macro_n > 0 ? macro_sum / static_cast<double>(macro_n) : 0.0;

  report.auroc = auroc(pos_binary, neg_binary);
  report.auprc = auprc(pos_binary, neg_binary);
  return report;
}

DiversityReport diversity_report(std::span<const std::size_t> train_counts,
                                 std::span<const std::size_t> aug_counts,
                                 std::span<const std::size_t> true_counts,
                                 std::size_t m) {
  if (train_counts.size() != aug_counts.size() ||
      train_counts.size() != true_counts.size())
    throw ContractError("diversity_report requires counts over one vocabulary");
  const Distribution train = Distribution::from_counts(train_counts);
  const Distribution aug = Distribution::from_counts(aug_counts);
  const Distribution truth = Distribution::from_counts(true_counts);

  DiversityReport report;
  report.se_before = shannon_entropy(train);
  report.se_after = shannon_entropy(aug);
  report.jsd_before = jensen_shannon_divergence(train, truth);
  report.jsd_after = jensen_shannon_divergence(aug, truth);
  report.coverage_before = coverage(train_counts, m);
  report.coverage_after = coverage(aug_counts, m);
  report.coverage_m = m;
  return report;
}

namespace {

ordered_json report_to_json(const MetricReport& r) {
  ordered_json j;
  j["protocol"] = r.protocol;
  j["auroc"] = r.auroc;
  j["accuracy"] = r.accuracy;
  j["auprc"] = r.auprc;
  j["f1_macro"] = r.f1_macro;
  j["f1_micro"] = r.f1_micro;
  j["shannon_entropy"] = r.shannon_entropy;
  j["jsd"] = r.jsd;
  j["coverage"] = r.coverage;
  j["coverage_m"] = r.coverage_m;
  return j;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write report: " + path.string());
  out << std::setprecision(17);
  return out;
}

}  // namespace

void write_metric_report_json(const MetricReport& report,
                              const std::filesystem::path& path) {
  auto out = open_out(path);
  out << report_to_json(report).dump(2) << "\n";
}

void write_metric_report_csv(const MetricReport& report,
                             const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "auroc,accuracy,auprc,f1_macro,f1_micro,shannon_entropy,jsd,coverage,coverage_m\n";
  out << report.auroc << "," << report.accuracy << "," << report.auprc << ","
      << report.f1_macro << "," << report.f1_micro << "," << report.shannon_entropy
      << "," << report.jsd << "," << report.coverage << "," << report.coverage_m << "\n";
}

void write_per_type_csv(const MetricReport& report,
                        const std::vector<std::string>& type_labels,
                        const std::filesystem::path& path) {
  if (type_labels.size() != report.per_type.size())
    throw ContractError("per-type table does not match the type vocabulary");
  auto out = open_out(path);
  out << "type,support,predicted,correct,precision,recall,f1\n";
  for (std::size_t t = 0; t < type_labels.size(); ++t) {
    const auto& s = report.per_type[t];
    out << type_labels[t] << "," << s.support << "," << s.predicted << "," << s.correct
        << "," << s.precision << "," << s.recall << "," << s.f1 << "\n";
  }
}

void write_diversity_report_json(const DiversityReport& report,
                                 const std::filesystem::path& path) {
  auto out = open_out(path);
  ordered_json j;
  j["se_before"] = report.se_before;
  j["se_after"] = report.se_after;
  j["jsd_before"] = report.jsd_before;
  j["jsd_after"] = report.jsd_after;
  j["coverage_before"] = report.coverage_before;
  j["coverage_after"] = report.coverage_after;
  j["coverage_m"] = report.coverage_m;
  out << j.dump(2) << "\n";
}

}  // namespace flowddi
