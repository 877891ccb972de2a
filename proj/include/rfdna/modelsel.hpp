#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <ostream>
#include <span>
#include <vector>

#include "rfdna/errors.hpp"
#include "rfdna/stats.hpp"
#include "rfdna/svm.hpp"

namespace rfdna {

inline constexpr std::size_t kDefaultPmfBins = 100;
inline constexpr double kTvrGate = 0.90;
inline constexpr double kFvrGate = 0.10;

struct PmfStats {
  double mean = 0.0;
  double variance = 0.0;
};

/// Mean and variance of a binned distribution, using bin centres.
inline PmfStats pmf_stats(std::span<const double> pmf, const SharedBins& bins) {
  PmfStats s;
  for (std::size_t k = 0; k < pmf.size(); ++k) s.mean += pmf[k] * bins.center(k);
  for (std::size_t k = 0; k < pmf.size(); ++k) {
    const double d = bins.center(k) - s.mean;
    s.variance += pmf[k] * d * d;
  }
  return s;
}

struct MarginPmfPair {
  SharedBins bins;
  std::vector<double> pmf_pos;  // authorized radio, y = +1
  std::vector<double> pmf_neg;  // other authorized radios, y = -1
  PmfStats stats_pos;
  PmfStats stats_neg;
  double bc = 0.0;

  std::vector<double> bin_edges() const { return bins.edges(); }
};

/// Histograms two margin samples over shared edges spanning their pooled range.
inline MarginPmfPair margin_pmfs(std::span<const double> margins_pos, std::span<const double> margins_neg,
                                 std::size_t bins = kDefaultPmfBins) {
  if (margins_pos.empty() || margins_neg.empty()) fail(ErrorCode::InvalidInput, "margin sets must be non-empty");
  MarginPmfPair p;
  p.bins = pooled_bins(margins_pos, margins_neg, bins);
  p.pmf_pos = histogram_pmf(margins_pos, p.bins);
  p.pmf_neg = histogram_pmf(margins_neg, p.bins);
  p.stats_pos = pmf_stats(p.pmf_pos, p.bins);
  p.stats_neg = pmf_stats(p.pmf_neg, p.bins);
  p.bc = bhattacharyya(p.pmf_pos, p.pmf_neg);
  return p;
}

/// Margins m = 2 y f for full-fingerprint rows: y = +1 for the authorized
/// radio's rows, y = -1 for the others.
inline MarginPmfPair build_margin_pmfs(const SvmModel& model, const Eigen::MatrixXd& authorized_rows,
                                       const Eigen::MatrixXd& other_rows, std::size_t bins = kDefaultPmfBins) {
  if (authorized_rows.rows() == 0 || other_rows.rows() == 0)
    fail(ErrorCode::InvalidInput, "margin PMFs need both fingerprint sets");
  const Eigen::VectorXd pos = 2.0 * score_rows(model, authorized_rows);
  const Eigen::VectorXd neg = -2.0 * score_rows(model, other_rows);
  return margin_pmfs(std::span<const double>(pos.data(), static_cast<std::size_t>(pos.size())),
                     std::span<const double>(neg.data(), static_cast<std::size_t>(neg.size())), bins);
}

struct ModelQuality {
  double mean_distance = 0.0;
  double bc = 0.0;
  double variance_sum = 0.0;
};

inline ModelQuality model_quality(const MarginPmfPair& p) {
  return {std::abs(p.stats_pos.mean - p.stats_neg.mean), p.bc, p.stats_pos.variance + p.stats_neg.variance};
}

struct CandidateModel {
  SvmModel model;
  std::size_t n_r = 0;
  double tvr_train = 0.0;
  double fvr_others_train = 0.0;  // worst single other authorized radio
  MarginPmfPair pmf_pair;
  double cv_error = 0.0;

  bool passes_gates() const noexcept { return tvr_train >= kTvrGate && fvr_others_train <= kFvrGate; }
};

/// Gate on TVR >= 0.9 and FVR <= 0.1, then prefer the smallest BC, the
/// largest mean distance, the smallest variance sum and the fewest features,
/// in that order. With no survivor, the highest TVR wins (ties: fewest features).
inline std::size_t select_best_index(std::span<const CandidateModel> candidates) {
  if (candidates.empty()) fail(ErrorCode::InvalidInput, "no candidate models");
  std::size_t best = candidates.size();
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    const auto& c = candidates[k];
    if (!c.passes_gates()) continue;
    if (best == candidates.size()) {
      best = k;
      continue;
    }
    const ModelQuality q = model_quality(c.pmf_pair), qb = model_quality(candidates[best].pmf_pair);
    const auto& b = candidates[best];
    bool better = false;
    if (q.bc != qb.bc) better = q.bc < qb.bc;
    else if (q.mean_distance != qb.mean_distance) better = q.mean_distance > qb.mean_distance;
    else if (q.variance_sum != qb.variance_sum) better = q.variance_sum < qb.variance_sum;
    else better = c.n_r < b.n_r;
    if (better) best = k;
  }
  if (best != candidates.size()) return best;

  best = 0;
  for (std::size_t k = 1; k < candidates.size(); ++k) {
    const auto& c = candidates[k];
    const auto& b = candidates[best];
    if (c.tvr_train > b.tvr_train || (c.tvr_train == b.tvr_train && c.n_r < b.n_r)) best = k;
  }
  return best;
}

inline const CandidateModel& select_best(std::span<const CandidateModel> candidates) {
  return candidates[select_best_index(candidates)];
}

/// CSV: N_r, tvr_train, fvr_others_train, bc, mean_distance, variance_sum, selected.
inline void write_candidate_ledger(std::ostream& os, std::span<const CandidateModel> candidates, std::size_t selected) {
  os << "N_r,tvr_train,fvr_others_train,bc,mean_distance,variance_sum,selected\n";
  os.precision(17);
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    const auto& c = candidates[k];
    const ModelQuality q = model_quality(c.pmf_pair);
    os << c.n_r << ',' << c.tvr_train << ',' << c.fvr_others_train << ',' << q.bc << ',' << q.mean_distance << ','
       << q.variance_sum << ',' << (k == selected ? 1 : 0) << '\n';
  }
}

}  // namespace rfdna
