#pragma once

#include <limits>
#include <span>
#include <vector>

namespace pisa::metrics {

/// Scores with binary labels. Holds views; the caller owns the data.
struct ScoredSet {
  std::span<const double> scores;
  std::span<const int> labels;

  std::size_t positives() const;
  std::size_t negatives() const;
};

/// Mann-Whitney AUC: (#pos>neg + 0.5 #ties) / (m n), via midranks in O(N log N).
double auc(const ScoredSet& s);

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  double threshold = std::numeric_limits<double>::infinity();
};

/// One point per distinct score (descending), preceded by (0, 0) at +inf.
std::vector<RocPoint> roc_curve(const ScoredSet& s);

/// Trapezoidal area under a curve returned by roc_curve.
double trapezoid_area(std::span<const RocPoint> curve);

/// Mean of precision@k over the ranks k of the positives. Ranking is by
/// descending score with ties broken by ascending sample index.
double average_precision(const ScoredSet& s);

struct DeLongResult {
  double auc_a = 0.0;
  double auc_b = 0.0;
  double variance = 0.0;  // of auc_a - auc_b
  double z = 0.0;
  double p_value = 1.0;   // two-sided
};

/// DeLong's test for two correlated AUCs on the same labelled sample.
DeLongResult delong_test(std::span<const double> scores_a, std::span<const double> scores_b,
                         std::span<const int> labels);

/// Standard normal CDF.
double normal_cdf(double x);

}  // namespace pisa::metrics
