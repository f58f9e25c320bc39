#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "recsys/errors.hpp"

namespace recsys {

namespace detail {

inline void require_probability(double p, const char* name) {
  if (!(p > 0.0 && p < 1.0)) {
    throw UsageError(std::string(name) + " must lie strictly between 0 and 1");
  }
}

/// log C(n,i) + i log p + (n-i) log(1-p), in extended precision. Keeping the
/// whole term in long double holds the relative error near 1e-14 even for
/// n = 10^4, where double lgamma alone would already cost ~1e-11.
inline long double log_binomial_term(int n, int i, double p) {
  return std::lgamma(static_cast<long double>(n) + 1) -
         std::lgamma(static_cast<long double>(i) + 1) -
         std::lgamma(static_cast<long double>(n - i) + 1) +
         static_cast<long double>(i) * std::log(static_cast<long double>(p)) +
         static_cast<long double>(n - i) * std::log1p(static_cast<long double>(-p));
}

}  // namespace detail

/// Point estimate of the p-quantile: X_(ceil(np)) of the sorted sample,
/// 1-based and clamped to [1, n].
inline double empirical_quantile(std::vector<double> sample, double p) {
  if (sample.empty()) throw DataError("empirical_quantile: empty sample");
  detail::require_probability(p, "p");
  std::sort(sample.begin(), sample.end());
  const auto n = static_cast<double>(sample.size());
  auto idx = static_cast<std::ptrdiff_t>(std::ceil(n * p));
  idx = std::clamp<std::ptrdiff_t>(idx, 1, static_cast<std::ptrdiff_t>(sample.size()));
  return sample[static_cast<std::size_t>(idx - 1)];
}

/// P(X_(r) <= xi_p < X_(s)) = sum_{i=r}^{s-1} C(n,i) p^i (1-p)^(n-i).
/// Terms are built from log-gamma and accumulated smallest-first.
inline double ci_coverage(int n, double p, int r, int s) {
  if (n < 1) throw UsageError("ci_coverage: n must be positive");
  detail::require_probability(p, "p");
  if (!(1 <= r && r < s && s <= n)) {
    throw UsageError("ci_coverage: need 1 <= r < s <= n, got r=" + std::to_string(r) +
                     " s=" + std::to_string(s) + " n=" + std::to_string(n));
  }
  std::vector<long double> terms;
  terms.reserve(static_cast<std::size_t>(s - r));
  for (int i = r; i < s; ++i) {
    terms.push_back(std::exp(detail::log_binomial_term(n, i, p)));
  }
  std::sort(terms.begin(), terms.end());
  long double sum = 0;
  for (long double t : terms) sum += t;
  return static_cast<double>(std::min<long double>(sum, 1.0L));
}

/// Widest possible order-statistic interval, the ceiling for any confidence
/// request at this n and p.
inline double max_attainable_coverage(int n, double p) {
  if (n < 2) throw UsageError("max_attainable_coverage: n must be at least 2");
  return ci_coverage(n, p, 1, n);
}

/// Distribution-free confidence interval for the p-quantile built on order
/// statistics: [X_(r), X_(s)) with coverage ci_coverage(n, p, r, s).
struct QuantileInterval {
  int r = 0;           // 1-based order-statistic indices, r < s <= n
  int s = 0;
  double coverage = 0.0;
  double lower = 0.0;  // X_(r)
  double upper = 0.0;  // X_(s)
  int n = 0;
  double p = 0.0;
};

/// Finds the narrowest index pair (r, s) whose coverage reaches `confidence`;
/// among pairs of equal width the smallest r wins. This width-then-r rule is
/// the normative tie-break. Errors out when even (1, n) cannot reach the
/// requested confidence, reporting the maximum attainable coverage.
inline QuantileInterval quantile_ci(std::vector<double> sample, double p, double confidence) {
  if (sample.size() < 2) throw DataError("quantile_ci: need at least 2 values");
  detail::require_probability(p, "p");
  detail::require_probability(confidence, "confidence");
  const int n = static_cast<int>(sample.size());

  const double max_coverage = max_attainable_coverage(n, p);
  if (max_coverage < confidence) {
    throw DataError("confidence " + std::to_string(confidence) +
                    " unattainable with n=" + std::to_string(n) +
                    ": maximum attainable coverage is " + std::to_string(max_coverage));
  }

  std::vector<long double> term(static_cast<std::size_t>(n));  // term[i] for i = 1..n-1
  for (int i = 1; i < n; ++i) {
    term[static_cast<std::size_t>(i)] = std::exp(detail::log_binomial_term(n, i, p));
  }

  int best_r = 1;
  int best_s = n;
  bool found = false;
  for (int width = 1; width < n && !found; ++width) {
    // sliding sum over i in [r, r+width-1]; candidates confirmed against the
    // exact ci_coverage so the sliding arithmetic never decides the result
    long double sliding = 0;
    for (int i = 1; i <= width; ++i) sliding += term[static_cast<std::size_t>(i)];
    for (int r = 1; r + width <= n; ++r) {
      if (sliding >= static_cast<long double>(confidence) - 1e-9L &&
          ci_coverage(n, p, r, r + width) >= confidence) {
        best_r = r;
        best_s = r + width;
        found = true;
        break;
      }
      if (r + width < n) {
        sliding += term[static_cast<std::size_t>(r + width)] - term[static_cast<std::size_t>(r)];
      }
    }
  }
  // max_coverage >= confidence guarantees the width n-1 pair (1, n) matched

  std::sort(sample.begin(), sample.end());
  QuantileInterval interval;
  interval.r = best_r;
  interval.s = best_s;
  interval.coverage = ci_coverage(n, p, best_r, best_s);
  interval.lower = sample[static_cast<std::size_t>(best_r - 1)];
  interval.upper = sample[static_cast<std::size_t>(best_s - 1)];
  interval.n = n;
  interval.p = p;
  return interval;
}

}  // namespace recsys
