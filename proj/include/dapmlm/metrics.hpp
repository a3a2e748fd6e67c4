#pragma once

// Classification metrics and the paired Wilcoxon signed-rank test.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dapmlm {

struct ClassTally {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  std::size_t support = 0;  // occurrences in the actual labels
};

struct ClassificationReport {
  double accuracy = 0.0;
  double precision = 0.0;  // support-weighted one-vs-rest
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t n_test = 0;
  std::map<std::string, ClassTally> per_class;
};

inline double accuracy(std::span<const std::string> predicted,
                       std::span<const std::string> actual) {
  if (predicted.size() != actual.size() || predicted.empty())
    throw std::invalid_argument("accuracy: sequences must be non-empty and equal length");
  std::size_t matches = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i)
    if (predicted[i] == actual[i]) ++matches;
  return static_cast<double>(matches) / static_cast<double>(predicted.size());
}

inline double f1(double precision, double recall) {
  if (precision < 0.0 || precision > 1.0 || recall < 0.0 || recall > 1.0)
    throw std::invalid_argument("f1: inputs must lie in [0,1]");
  const double denom = precision + recall;
  return denom > 0.0 ? 2.0 * precision * recall / denom : 0.0;
}

inline std::map<std::string, ClassTally> confusion_tallies(
    std::span<const std::string> predicted, std::span<const std::string> actual) {
  if (predicted.size() != actual.size() || predicted.empty())
    throw std::invalid_argument("metrics: sequences must be non-empty and equal length");
  std::map<std::string, ClassTally> tallies;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    tallies[actual[i]];
    tallies[predicted[i]];
  }
  for (auto& [label, t] : tallies) {
    for (std::size_t i = 0; i < actual.size(); ++i) {
      const bool is_actual = actual[i] == label;
      const bool is_pred = predicted[i] == label;
      if (is_actual) ++t.support;
      if (is_actual && is_pred) ++t.tp;
      else if (!is_actual && is_pred) ++t.fp;
      else if (is_actual && !is_pred) ++t.fn;
      else ++t.tn;
    }
  }
  return tallies;
}

// Support-weighted one-vs-rest precision and recall. With these weights the
// recall equals the plain accuracy.
inline std::pair<double, double> precision_recall(
    std::span<const std::string> predicted, std::span<const std::string> actual) {
  const auto tallies = confusion_tallies(predicted, actual);
  const double n = static_cast<double>(actual.size());
  double precision = 0.0, recall = 0.0;
  for (const auto& [label, t] : tallies) {
    const double w = static_cast<double>(t.support) / n;
    const double p_denom = static_cast<double>(t.tp + t.fp);
    const double r_denom = static_cast<double>(t.tp + t.fn);
    if (p_denom > 0.0) precision += w * static_cast<double>(t.tp) / p_denom;
    if (r_denom > 0.0) recall += w * static_cast<double>(t.tp) / r_denom;
  }
  // The weighted sums can exceed 1 by one ulp on a perfect classification.
  return {std::min(precision, 1.0), std::min(recall, 1.0)};
}

// Multiset variant: precision = |retrieved ∩ relevant| / |retrieved| and
// recall = |retrieved ∩ relevant| / |relevant|, with the intersection counted
// with multiplicity. The two label collections may differ in length.
inline std::pair<double, double> precision_recall_literal(
    std::span<const std::string> retrieved, std::span<const std::string> relevant) {
  if (retrieved.empty() || relevant.empty())
    throw std::invalid_argument("precision_recall_literal: empty label collection");
  std::map<std::string, std::size_t> counts;
  for (const auto& l : relevant) ++counts[l];
  std::size_t common = 0;
  for (const auto& l : retrieved) {
    auto it = counts.find(l);
    if (it != counts.end() && it->second > 0) {
      ++common;
      --it->second;
    }
  }
  return {static_cast<double>(common) / static_cast<double>(retrieved.size()),
          static_cast<double>(common) / static_cast<double>(relevant.size())};
}

inline ClassificationReport evaluate(std::span<const std::string> predicted,
                                     std::span<const std::string> actual) {
  ClassificationReport r;
  r.accuracy = accuracy(predicted, actual);
  const auto [p, rc] = precision_recall(predicted, actual);
  r.precision = p;
  r.recall = rc;
  r.f1 = f1(p, rc);
  r.n_test = actual.size();
  r.per_class = confusion_tallies(predicted, actual);
  return r;
}

// ---------------------------------------------------------------------------
// Wilcoxon signed-rank test (two-sided, paired).

struct WilcoxonResult {
  double statistic = 0.0;  // min(W+, W-)
  double p_value = 1.0;
  std::size_t n_effective = 0;
  bool rejected = false;  // p_value < alpha
};

// Exact null distribution by sign enumeration up to this many pairs; the
// normal approximation with tie correction takes over beyond it.
inline constexpr std::size_t kWilcoxonExactLimit = 12;

namespace detail {

// Average ranks of |d|, doubled so that midranks stay integral.
inline std::vector<int> doubled_ranks(const std::vector<double>& abs_diffs) {
  const std::size_t n = abs_diffs.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return abs_diffs[a] < abs_diffs[b]; });
  std::vector<int> ranks2(n, 0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && abs_diffs[order[j + 1]] == abs_diffs[order[i]]) ++j;
    // positions i..j (0-based) share the average rank; doubled it is i+j+2
    const int r2 = static_cast<int>(i + j + 2);
    for (std::size_t k = i; k <= j; ++k) ranks2[order[k]] = r2;
    i = j + 1;
  }
  return ranks2;
}

inline double normal_two_sided_p(double z) {
  return std::erfc(std::abs(z) / std::sqrt(2.0));
}

}  // namespace detail

inline WilcoxonResult wilcoxon_signed_rank(std::span<const double> sample_a,
                                           std::span<const double> sample_b,
                                           double alpha = 0.05) {
  if (sample_a.size() != sample_b.size())
    throw std::invalid_argument("wilcoxon: samples must be paired");
  std::vector<double> diffs;
  for (std::size_t i = 0; i < sample_a.size(); ++i) {
    const double d = sample_a[i] - sample_b[i];
    if (d != 0.0) diffs.push_back(d);
  }
  const std::size_t n = diffs.size();
  if (n < 3) throw std::invalid_argument("insufficient paired data");

  std::vector<double> abs_diffs(n);
  for (std::size_t i = 0; i < n; ++i) abs_diffs[i] = std::abs(diffs[i]);
  const auto ranks2 = detail::doubled_ranks(abs_diffs);

  long long w_pos2 = 0, total2 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    total2 += ranks2[i];
    if (diffs[i] > 0.0) w_pos2 += ranks2[i];
  }
  const double w_pos = static_cast<double>(w_pos2) / 2.0;
  const double w_neg = static_cast<double>(total2 - w_pos2) / 2.0;

  WilcoxonResult result;
  result.statistic = std::min(w_pos, w_neg);
  result.n_effective = n;

  if (n <= kWilcoxonExactLimit) {
    // Distribution of the doubled positive-rank sum over all 2^n sign
    // assignments, honoring tied midranks.
    std::vector<double> counts(static_cast<std::size_t>(total2) + 1, 0.0);
    counts[0] = 1.0;
    for (const int r2 : ranks2)
      for (std::size_t s = counts.size(); s-- > static_cast<std::size_t>(r2);)
        counts[s] += counts[s - static_cast<std::size_t>(r2)];
    const double total_count = std::ldexp(1.0, static_cast<int>(n));
    double le = 0.0, ge = 0.0;
    for (std::size_t s = 0; s < counts.size(); ++s) {
      if (static_cast<long long>(s) <= w_pos2) le += counts[s];
      if (static_cast<long long>(s) >= w_pos2) ge += counts[s];
    }
    result.p_value = std::min(1.0, 2.0 * std::min(le, ge) / total_count);
  } else {
    const double nd = static_cast<double>(n);
    const double mean = nd * (nd + 1.0) / 4.0;
    double tie_term = 0.0;
    std::map<int, double> tie_counts;
    for (const int r2 : ranks2) ++tie_counts[r2];
    for (const auto& [r2, t] : tie_counts) tie_term += t * t * t - t;
    const double var = nd * (nd + 1.0) * (2.0 * nd + 1.0) / 24.0 - tie_term / 48.0;
    const double cc = w_pos > mean ? -0.5 : 0.5;  // continuity correction
    const double z = (w_pos - mean + cc) / std::sqrt(var);
    result.p_value = detail::normal_two_sided_p(z);
  }
  result.rejected = result.p_value < alpha;
  return result;
}

}  // namespace dapmlm
