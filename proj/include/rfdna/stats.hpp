#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "rfdna/errors.hpp"

namespace rfdna {

/// Bin edges shared by two samples: `bins` equal-width bins over the pooled
/// [min, max]. A zero-width pooled range collapses to a single bin.
struct SharedBins {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t bins = 1;

  std::size_t index(double v) const noexcept {
    if (!(hi > lo)) return 0;
    const double pos = (v - lo) / (hi - lo) * static_cast<double>(bins);
    if (!(pos > 0.0)) return 0;
    const auto k = static_cast<std::size_t>(pos);
    return std::min(k, bins - 1);
  }

  double width() const noexcept { return hi > lo ? (hi - lo) / static_cast<double>(bins) : 0.0; }

  double center(std::size_t k) const noexcept {
    if (!(hi > lo)) return lo;
    return lo + (static_cast<double>(k) + 0.5) * width();
  }

  std::vector<double> edges() const {
    std::vector<double> e(bins + 1);
    for (std::size_t k = 0; k <= bins; ++k) e[k] = lo + static_cast<double>(k) * width();
    if (!(hi > lo)) e.back() = hi;
    return e;
  }
};

inline SharedBins pooled_bins(std::span<const double> a, std::span<const double> b, std::size_t bins) {
  if (bins == 0) fail(ErrorCode::InvalidParams, "bin count must be positive");
  if (a.empty() && b.empty()) fail(ErrorCode::InvalidInput, "both samples are empty");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (double v : a) lo = std::min(lo, v), hi = std::max(hi, v);
  for (double v : b) lo = std::min(lo, v), hi = std::max(hi, v);
  SharedBins sb{lo, hi, hi > lo ? bins : 1};
  return sb;
}

/// Probability mass per bin (sums to 1 for a non-empty sample).
inline std::vector<double> histogram_pmf(std::span<const double> x, const SharedBins& bins) {
  std::vector<double> p(bins.bins, 0.0);
  if (x.empty()) return p;
  for (double v : x) p[bins.index(v)] += 1.0;
  const double inv = 1.0 / static_cast<double>(x.size());
  for (double& v : p) v *= inv;
  return p;
}

/// Sum over bins of sqrt(P1(b) P2(b)).
inline double bhattacharyya(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) fail(ErrorCode::InvalidShape, "histograms differ in bin count");
  double bc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) bc += std::sqrt(p[i] * q[i]);
  return std::clamp(bc, 0.0, 1.0);
}

/// Square-root rule used for every feature histogram: ceil(sqrt(n)).
inline std::size_t sqrt_rule_bins(std::size_t n) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n)))));
}

inline double mean_of(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v;
  return x.empty() ? 0.0 : s / static_cast<double>(x.size());
}

/// Unbiased (n - 1) sample variance.
inline double sample_variance(std::span<const double> x) {
  if (x.size() < 2) return 0.0;
  const double m = mean_of(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

}  // namespace rfdna
