#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rfdna/cohort.hpp"
#include "rfdna/errors.hpp"
#include "rfdna/fingerprint.hpp"
#include "rfdna/seed.hpp"
#include "rfdna/signal.hpp"
#include "rfdna/tfr.hpp"

namespace rfdna {

/// Clean, aligned and filtered near-transient blocks for every radio.
struct CaptureSet {
  std::vector<std::string> ids;
  std::vector<std::vector<ComplexBurst>> bursts;  // parallel to ids

  const std::vector<ComplexBurst>& of(const std::string& id) const {
    for (std::size_t k = 0; k < ids.size(); ++k)
      if (ids[k] == id) return bursts[k];
    fail(ErrorCode::MissingData, "no captures for radio '" + id + "'");
  }
};

inline std::uint64_t burst_seed(std::uint64_t master, const std::string& id, std::size_t burst) {
  return derive_seed(master, SeedStream::Burst, {id_key(id), burst});
}

inline std::uint64_t noise_seed(std::uint64_t master, const std::string& id, std::size_t burst, std::size_t z) {
  return derive_seed(master, SeedStream::Noise, {id_key(id), burst, z});
}

inline CaptureSet capture_cohort(const Cohort& cohort, const CaptureSettings& cfg, std::uint64_t master) {
  CaptureSet set;
  for (const auto& p : cohort.profiles) {
    set.ids.push_back(p.radio_id);
    auto& out = set.bursts.emplace_back();
    out.reserve(cohort.bursts_per_radio);
    for (std::size_t b = 0; b < cohort.bursts_per_radio; ++b)
      out.push_back(capture_near_transient(p, cfg, burst_seed(master, p.radio_id, b)));
  }
  return set;
}

/// Fingerprints at one SNR, indexed by (radio, burst, realization). Every
/// read through the accessors is recorded per radio so tests can audit which
/// radios a stage looked at.
class FingerprintDataset {
 public:
  FingerprintDataset() = default;
  FingerprintDataset(SnrDb snr, std::size_t n_bursts, std::size_t n_realizations)
      : snr_(snr), n_bursts_(n_bursts), n_realizations_(n_realizations) {}

  SnrDb snr() const noexcept { return snr_; }
  std::size_t bursts() const noexcept { return n_bursts_; }
  std::size_t realizations() const noexcept { return n_realizations_; }
  const std::vector<std::string>& ids() const noexcept { return ids_; }

  bool has(const std::string& id) const { return index_.count(id) != 0; }

  /// rows[z * bursts + b]
  void add(const std::string& id, std::vector<FeatureVector> rows) {
    if (rows.size() != n_bursts_ * n_realizations_)
      fail(ErrorCode::InvalidShape, "radio '" + id + "' has " + std::to_string(rows.size()) + " rows, expected " +
                                        std::to_string(n_bursts_ * n_realizations_));
    if (has(id)) fail(ErrorCode::InvalidInput, "radio '" + id + "' added twice");
    index_[id] = data_.size();
    ids_.push_back(id);
    data_.push_back(std::move(rows));
  }

  const FeatureVector& at(const std::string& id, std::size_t burst, std::size_t z) const {
    const auto& rows = radio(id);
    if (burst >= n_bursts_ || z >= n_realizations_) fail(ErrorCode::MissingData, "fingerprint index out of range");
    return rows[z * n_bursts_ + burst];
  }

  /// Bursts [0, n) of each listed realization, realization-major.
  Eigen::MatrixXd matrix(const std::string& id, std::size_t n, std::span<const std::size_t> zs) const {
    const auto& rows = radio(id);
    if (n > n_bursts_) fail(ErrorCode::MissingData, "radio '" + id + "' has only " + std::to_string(n_bursts_) + " bursts");
    Eigen::MatrixXd M(static_cast<Eigen::Index>(n * zs.size()), static_cast<Eigen::Index>(kNumFeatures));
    Eigen::Index r = 0;
    for (std::size_t z : zs) {
      if (z >= n_realizations_) fail(ErrorCode::MissingData, "realization " + std::to_string(z) + " not generated");
      for (std::size_t b = 0; b < n; ++b, ++r)
        M.row(r) = Eigen::Map<const Eigen::RowVectorXd>(rows[z * n_bursts_ + b].data(),
                                                        static_cast<Eigen::Index>(kNumFeatures));
    }
    return M;
  }

  const std::set<std::string>& access_log() const noexcept { return log_; }
  void clear_access_log() const { log_.clear(); }

  std::vector<Fingerprint> to_records() const {
    std::vector<Fingerprint> out;
    out.reserve(data_.size() * n_bursts_ * n_realizations_);
    for (std::size_t k = 0; k < ids_.size(); ++k)
      for (std::size_t z = 0; z < n_realizations_; ++z)
        for (std::size_t b = 0; b < n_bursts_; ++b) {
          Fingerprint fp;
          fp.features = data_[k][z * n_bursts_ + b];
          fp.radio_id = ids_[k];
          fp.snr_db = snr_;
          fp.realization = static_cast<std::uint32_t>(z);
          out.push_back(std::move(fp));
        }
    return out;
  }

  /// Inverse of to_records: records are grouped by radio, then realization,
  /// with bursts in order inside each group.
  static FingerprintDataset from_records(const std::vector<Fingerprint>& records) {
    if (records.empty()) fail(ErrorCode::MissingData, "empty fingerprint store");
    std::vector<std::string> order;
    std::map<std::string, std::map<std::uint32_t, std::vector<FeatureVector>>> grouped;
    for (const auto& fp : records) {
      if (!grouped.count(fp.radio_id)) order.push_back(fp.radio_id);
      grouped[fp.radio_id][fp.realization].push_back(fp.features);
    }
    const auto& first = grouped.begin()->second;
    const std::size_t nz = first.size();
    const std::size_t nb = first.begin()->second.size();
    FingerprintDataset ds(records.front().snr_db, nb, nz);
    for (const auto& id : order) {
      const auto& by_z = grouped[id];
      std::vector<FeatureVector> rows;
      std::uint32_t expect = 0;
      for (const auto& [z, v] : by_z) {
        if (z != expect++ || v.size() != nb)
          fail(ErrorCode::FormatError, "radio '" + id + "' does not have a full burst x realization grid");
        rows.insert(rows.end(), v.begin(), v.end());
      }
      ds.add(id, std::move(rows));
    }
    return ds;
  }

 private:
  const std::vector<FeatureVector>& radio(const std::string& id) const {
    const auto it = index_.find(id);
    if (it == index_.end()) fail(ErrorCode::MissingData, "no fingerprints for radio '" + id + "'");
    log_.insert(id);
    return data_[it->second];
  }

  SnrDb snr_;
  std::size_t n_bursts_ = 0;
  std::size_t n_realizations_ = 0;
  std::vector<std::string> ids_;
  std::map<std::string, std::size_t> index_;
  std::vector<std::vector<FeatureVector>> data_;
  mutable std::set<std::string> log_;
};

/// For every burst and realization: like-filtered noise at the target SNR,
/// Gabor transform, normalisation, 204 features. Noise seeds depend on
/// (radio, burst, realization) only, so every SNR sees the same draws.
inline FingerprintDataset generate_dataset(const CaptureSet& captures, SnrDb snr, std::size_t n_realizations,
                                           const GaborParams& gabor, const FilterSpec& filter, std::uint64_t master) {
  if (captures.ids.empty()) fail(ErrorCode::MissingData, "no captures");
  const std::size_t nb = captures.bursts.front().size();
  const GaborAnalyzer analyzer(gabor);
  FingerprintDataset ds(snr, nb, n_realizations);
  for (std::size_t k = 0; k < captures.ids.size(); ++k) {
    const auto& id = captures.ids[k];
    const auto& bursts = captures.bursts[k];
    if (bursts.size() != nb) fail(ErrorCode::InvalidShape, "radios differ in burst count");
    std::vector<FeatureVector> rows;
    rows.reserve(nb * n_realizations);
    for (std::size_t z = 0; z < n_realizations; ++z)
      for (std::size_t b = 0; b < nb; ++b) {
        const ComplexBurst noisy = add_awgn(bursts[b], snr, filter, noise_seed(master, id, b, z));
        rows.push_back(fingerprint_burst(analyzer, noisy, static_cast<std::uint32_t>(z)).features);
      }
    ds.add(id, std::move(rows));
  }
  return ds;
}

}  // namespace rfdna
