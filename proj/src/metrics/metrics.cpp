#include "pisa/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "pisa/common/errors.hpp"

namespace pisa::metrics {

namespace {

void check(const ScoredSet& s) {
  if (s.scores.size() != s.labels.size()) throw MetricError("scores and labels differ in length");
  for (const int y : s.labels)
    if (y != 0 && y != 1) throw MetricError("labels must be 0 or 1");
}

void require_both_classes(const ScoredSet& s, const char* what) {
  if (s.positives() == 0 || s.negatives() == 0)
    throw MetricError(std::string(what) + " is undefined unless both classes are present");
}

/// Midranks (1-based, ties share the mean rank) of v.
std::vector<double> midranks(std::span<const double> v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

struct Components {
  std::vector<double> v10;  // per positive
  std::vector<double> v01;  // per negative
};

// Structural components from midranks: for positive x_i,
// V10_i = (R_i - R^pos_i) / n; for negative y_j, V01_j = 1 - (R_j - R^neg_j) / m.
Components components(std::span<const double> scores, std::span<const int> labels) {
  std::vector<double> pos, neg;
  for (std::size_t k = 0; k < scores.size(); ++k) (labels[k] == 1 ? pos : neg).push_back(scores[k]);
  const double m = static_cast<double>(pos.size());
  const double n = static_cast<double>(neg.size());
  std::vector<double> all(pos);
  all.insert(all.end(), neg.begin(), neg.end());
  const auto r_all = midranks(all);
  const auto r_pos = midranks(pos);
  const auto r_neg = midranks(neg);
  Components c;
  c.v10.resize(pos.size());
  c.v01.resize(neg.size());
  for (std::size_t i = 0; i < pos.size(); ++i) c.v10[i] = (r_all[i] - r_pos[i]) / n;
  for (std::size_t j = 0; j < neg.size(); ++j) c.v01[j] = 1.0 - (r_all[pos.size() + j] - r_neg[j]) / m;
  return c;
}

// Sample covariance (divisor k - 1); zero when k < 2.
double covariance(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t k = a.size();
  if (k < 2) return 0.0;
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / static_cast<double>(k);
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / static_cast<double>(k);
  double s = 0.0;
  for (std::size_t i = 0; i < k; ++i) s += (a[i] - ma) * (b[i] - mb);
  return s / static_cast<double>(k - 1);
}

}  // namespace

std::size_t ScoredSet::positives() const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
}

std::size_t ScoredSet::negatives() const { return labels.size() - positives(); }

double auc(const ScoredSet& s) {
  check(s);
  require_both_classes(s, "AUC");
  const auto ranks = midranks(s.scores);
  double rank_sum = 0.0;
  for (std::size_t k = 0; k < ranks.size(); ++k)
    if (s.labels[k] == 1) rank_sum += ranks[k];
  const double m = static_cast<double>(s.positives());
  const double n = static_cast<double>(s.negatives());
  return (rank_sum - m * (m + 1.0) / 2.0) / (m * n);
}

std::vector<RocPoint> roc_curve(const ScoredSet& s) {
  check(s);
  require_both_classes(s, "ROC curve");
  std::vector<std::size_t> order(s.scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return s.scores[a] > s.scores[b]; });
  const double m = static_cast<double>(s.positives());
  const double n = static_cast<double>(s.negatives());
  std::vector<RocPoint> curve{RocPoint{}};
  double tp = 0.0, fp = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    const double threshold = s.scores[order[i]];
    while (i < order.size() && s.scores[order[i]] == threshold) {
      (s.labels[order[i]] == 1 ? tp : fp) += 1.0;
      ++i;
    }
    curve.push_back(RocPoint{fp / n, tp / m, threshold});
  }
  return curve;
}

double trapezoid_area(std::span<const RocPoint> curve) {
  double area = 0.0;
  for (std::size_t k = 1; k < curve.size(); ++k)
    area += (curve[k].fpr - curve[k - 1].fpr) * (curve[k].tpr + curve[k - 1].tpr) / 2.0;
  return area;
}

double average_precision(const ScoredSet& s) {
  check(s);
  const std::size_t m = s.positives();
  if (m == 0) throw MetricError("average precision is undefined without positives");
  std::vector<std::size_t> order(s.scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return s.scores[a] > s.scores[b]; });
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (s.labels[order[k]] != 1) continue;
    ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(k + 1);
  }
  return sum / static_cast<double>(m);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

DeLongResult delong_test(std::span<const double> scores_a, std::span<const double> scores_b,
                         std::span<const int> labels) {
  if (scores_a.size() != labels.size() || scores_b.size() != labels.size())
    throw MetricError("delong_test: score vectors and labels differ in length");
  const ScoredSet sa{scores_a, labels};
  check(sa);
  require_both_classes(sa, "DeLong test");
  const Components a = components(scores_a, labels);
  const Components b = components(scores_b, labels);
  const double m = static_cast<double>(a.v10.size());
  const double n = static_cast<double>(a.v01.size());

  const double s10 = covariance(a.v10, a.v10) + covariance(b.v10, b.v10) - 2.0 * covariance(a.v10, b.v10);
  const double s01 = covariance(a.v01, a.v01) + covariance(b.v01, b.v01) - 2.0 * covariance(a.v01, b.v01);

  DeLongResult r;
  // Reported AUCs come from the rank-sum formula so they agree with auc() to the bit.
  r.auc_a = auc(sa);
  r.auc_b = auc(ScoredSet{scores_b, labels});
  r.variance = std::max(0.0, s10 / m + s01 / n);
  if (r.variance == 0.0) {
    if (r.auc_a != r.auc_b)
      throw MetricError("delong_test: degenerate variance with unequal AUCs (" + std::to_string(r.auc_a) + " vs " +
                        std::to_string(r.auc_b) + ")");
    r.z = 0.0;
    r.p_value = 1.0;
    return r;
  }
  r.z = (r.auc_a - r.auc_b) / std::sqrt(r.variance);
  r.p_value = std::min(1.0, std::erfc(std::abs(r.z) / std::sqrt(2.0)));
  return r;
}

}  // namespace pisa::metrics
