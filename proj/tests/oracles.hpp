// Independent brute-force reference implementations used to check the
// library's metrics and probability machinery. Deliberately written along
// different algebraic routes than the implementations they verify.
#pragma once

#include <algorithm>
#include <cmath>
#include <set>
#include <span>
#include <vector>

namespace oracles {

// Direct definition, natural log rescaled.
inline double entropy_bits(std::span<const double> p) {
  double h = 0.0;
  for (double v : p)
    if (v > 0.0) h -= v * std::log(v);
  return h / std::log(2.0);
}

// Entropy route: JSD = H(M) - (H(P) + H(Q)) / 2, not the KL sum.
inline double jsd_bits(std::span<const double> p, std::span<const double> q) {
  std::vector<double> m(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) m[i] = 0.5 * (p[i] + q[i]);
  return entropy_bits(m) - 0.5 * entropy_bits(p) - 0.5 * entropy_bits(q);
}

// All-pairs comparison: wins count 1, ties count 1/2.
inline double auroc_pairwise(std::span<const double> pos, std::span<const double> neg) {
  double wins = 0.0;
  for (double s : pos)
    for (double t : neg) {
      if (s > t)
        wins += 1.0;
      else if (s == t)
        wins += 0.5;
    }
  return wins / (static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

// O(n^2) threshold sweep: recount tp/fp from scratch at every distinct
// score, step-interpolated area.
inline double auprc_sweep(std::span<const double> pos, std::span<const double> neg) {
  std::set<double, std::greater<double>> thresholds(pos.begin(), pos.end());
  thresholds.insert(neg.begin(), neg.end());
  double area = 0.0;
  double prev_recall = 0.0;
  for (double thr : thresholds) {
    std::size_t tp = 0, fp = 0;
    for (double s : pos)
      if (s >= thr) ++tp;
    for (double s : neg)
      if (s >= thr) ++fp;
    const double recall = static_cast<double>(tp) / static_cast<double>(pos.size());
    const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    area += (recall - prev_recall) * precision;
    prev_recall = recall;
  }
  return area;
}

}  // namespace oracles
