#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "flowddi/graph.hpp"

namespace flowddi {

// Probability vector over interaction types: nonnegative, sums to 1
// within 1e-9.
class Distribution {
 public:
  explicit Distribution(std::vector<double> p);
  static Distribution from_counts(std::span<const std::size_t> counts);

  std::size_t size() const { return p_.size(); }
  double operator[](std::size_t i) const { return p_[i]; }
  std::span<const double> values() const { return p_; }

 private:
  std::vector<double> p_;
};

// H(P) = -sum p_i log2 p_i, with 0 log 0 = 0. Result in bits.
double shannon_entropy(const Distribution& p);

// JSD(P||Q) = 0.5 KL(P||M) + 0.5 KL(Q||M), M = (P+Q)/2, log base 2, so the
// value lies in [0, 1].
double jensen_shannon_divergence(const Distribution& p, const Distribution& q);

// Fraction of the type vocabulary appearing at least m times in the
// multiset, given as per-type counts.
double coverage(std::span<const std::size_t> counts_per_type, std::size_t m = 1);

// Rank-statistic AUROC with ties counted 0.5.
double auroc(std::span<const double> positive_scores,
             std::span<const double> negative_scores);

// Step-interpolated area under the precision-recall curve, tie groups
// collapsed to one threshold.
double auprc(std::span<const double> positive_scores,
             std::span<const double> negative_scores);

struct PerTypeStats {
  std::size_t support = 0;
  std::size_t predicted = 0;
  std::size_t correct = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct ClassificationReport {
  double auroc = 0.0;
  double accuracy = 0.0;
  double auprc = 0.0;
  double macro_f1 = 0.0;  // over types with test support
  double micro_f1 = 0.0;
  std::vector<PerTypeStats> per_type;
};

// Multi-type metrics from per-example probability vectors. Accuracy and F1
// come from argmax predictions on the positives; AUROC/AUPRC read the task
// as binary, scoring each example by its max type probability against the
// supplied scored non-edges.
ClassificationReport classification_metrics(
    const std::vector<std::vector<double>>& scores, std::span<const TypeIndex> labels,
    const std::vector<std::vector<double>>& negatives);

struct DiversityReport {
  double se_before = 0.0;
  double se_after = 0.0;
  double jsd_before = 0.0;
  double jsd_after = 0.0;
  double coverage_before = 0.0;
  double coverage_after = 0.0;
  std::size_t coverage_m = 1;
};

// Before/after view of the dataset type distribution; JSD is measured
// against the supplied reference ("true") counts.
DiversityReport diversity_report(std::span<const std::size_t> train_counts,
                                 std::span<const std::size_t> aug_counts,
                                 std::span<const std::size_t> true_counts,
                                 std::size_t m = 1);

struct MetricReport {
  double auroc = 0.0;
  double accuracy = 0.0;
  double auprc = 0.0;
  double f1_macro = 0.0;
  double f1_micro = 0.0;
  double shannon_entropy = 0.0;  // of the predicted type distribution
  double jsd = 0.0;              // predicted vs true test type distribution
  double coverage = 0.0;         // types predicted at least m times
  std::size_t coverage_m = 1;
  std::string protocol;
  std::vector<PerTypeStats> per_type;
};

void write_metric_report_json(const MetricReport& report,
                              const std::filesystem::path& path);
// Single flat row: header line plus one value line.
void write_metric_report_csv(const MetricReport& report,
                             const std::filesystem::path& path);
void write_per_type_csv(const MetricReport& report,
                        const std::vector<std::string>& type_labels,
                        const std::filesystem::path& path);

void write_diversity_report_json(const DiversityReport& report,
                                 const std::filesystem::path& path);

}  // namespace flowddi
