#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rfdna/errors.hpp"
#include "rfdna/signal.hpp"
#include "rfdna/tfr.hpp"

namespace rfdna {

inline constexpr std::size_t kGridSize = 150;       // M = K_G
inline constexpr std::size_t kPatchTime = 15;       // N_T
inline constexpr std::size_t kPatchFreq = 10;       // N_F
inline constexpr std::size_t kTimeBlocks = kGridSize / kPatchTime;  // 10
inline constexpr std::size_t kFreqBlocks = 5;
inline constexpr std::size_t kNumPatches = kTimeBlocks * kFreqBlocks;  // N_P = 50
inline constexpr std::size_t kRoiWidth = kFreqBlocks * kPatchFreq;     // 50 centred columns
inline constexpr std::size_t kRoiFirstCol = (kGridSize - kRoiWidth) / 2;
inline constexpr std::size_t kStatsPerRegion = 4;
inline constexpr std::size_t kNumFeatures = (kNumPatches + 1) * kStatsPerRegion;  // N_f = 204

static_assert(kNumFeatures == 204);

struct PatchRegion {
  std::size_t row0 = 0;  // time
  std::size_t col0 = 0;  // frequency
  std::size_t rows = kPatchTime;
  std::size_t cols = kPatchFreq;

  std::size_t cell_count() const noexcept { return rows * cols; }
};

struct PatchGrid {
  std::vector<PatchRegion> patches;
  std::size_t roi_first_col = kRoiFirstCol;
  std::size_t roi_width = kRoiWidth;
};

/// Tiles the centred 50 frequency columns of a 150x150 surface into
/// 10 time blocks x 5 frequency blocks. Patches are ordered time block
/// first, then frequency block (lowest frequency first).
inline PatchGrid tile_patches(const TimeFrequencyMatrix& tf) {
  if (tf.values.rows() != static_cast<Eigen::Index>(kGridSize) ||
      tf.values.cols() != static_cast<Eigen::Index>(kGridSize))
    fail(ErrorCode::InvalidShape, "expected a 150x150 surface, got " + std::to_string(tf.values.rows()) + "x" +
                                      std::to_string(tf.values.cols()));
  if (!tf.normalized || !tf.centered) fail(ErrorCode::InvalidShape, "surface must be normalized and centered");

  PatchGrid grid;
  grid.patches.reserve(kNumPatches);
  for (std::size_t t = 0; t < kTimeBlocks; ++t)
    for (std::size_t f = 0; f < kFreqBlocks; ++f)
      grid.patches.push_back(PatchRegion{t * kPatchTime, kRoiFirstCol + f * kPatchFreq, kPatchTime, kPatchFreq});
  return grid;
}

/// Population moments: sigma, sigma^2, skewness, non-excess kurtosis.
struct PatchStats {
  double stddev = 0.0;
  double variance = 0.0;
  double skewness = 0.0;
  double kurtosis = 0.0;
};

inline PatchStats patch_stats(std::span<const double> cells) {
  if (cells.empty()) fail(ErrorCode::InvalidValue, "no cells");
  double mean = 0.0;
  for (double v : cells) {
    if (!std::isfinite(v)) fail(ErrorCode::InvalidValue, "non-finite cell value");
    mean += v;
  }
  const double n = static_cast<double>(cells.size());
  mean /= n;

  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double v : cells) {
    const double d = v - mean;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  if (std::all_of(cells.begin(), cells.end(), [&](double v) { return v == cells.front(); })) return {};
  m2 /= n;
  m3 /= n;
  m4 /= n;
  if (m2 == 0.0) return {};

  const double sd = std::sqrt(m2);
  return PatchStats{sd, m2, m3 / (m2 * sd), m4 / (m2 * m2)};
}

/// Copies the cells of one region in row-major order.
inline std::vector<double> region_cells(const TimeFrequencyMatrix& tf, const PatchRegion& r) {
  std::vector<double> cells;
  cells.reserve(r.cell_count());
  for (std::size_t i = 0; i < r.rows; ++i)
    for (std::size_t j = 0; j < r.cols; ++j)
      cells.push_back(tf.values(static_cast<Eigen::Index>(r.row0 + i), static_cast<Eigen::Index>(r.col0 + j)));
  return cells;
}

using FeatureVector = std::array<double, kNumFeatures>;

struct FingerprintMeta {
  std::string radio_id;
  std::optional<std::string> claimed_id;
  SnrDb snr_db;
  std::uint32_t realization = 0;
};

struct Fingerprint {
  FeatureVector features{};
  std::string radio_id;
  std::optional<std::string> claimed_id;
  SnrDb snr_db;
  std::uint32_t realization = 0;
};

/// 50 patches x (sigma, sigma^2, gamma, kappa), then the same four over the
/// whole surface.
inline Fingerprint gen_fingerprint(const TimeFrequencyMatrix& tf, const FingerprintMeta& meta) {
  const PatchGrid grid = tile_patches(tf);
  Fingerprint fp;
  fp.radio_id = meta.radio_id;
  fp.claimed_id = meta.claimed_id;
  fp.snr_db = meta.snr_db;
  fp.realization = meta.realization;

  std::size_t k = 0;
  auto put = [&](const PatchStats& s) {
    fp.features[k++] = s.stddev;
    fp.features[k++] = s.variance;
    fp.features[k++] = s.skewness;
    fp.features[k++] = s.kurtosis;
  };
  for (const PatchRegion& r : grid.patches) put(patch_stats(region_cells(tf, r)));
  put(patch_stats(std::span<const double>(tf.values.data(), static_cast<std::size_t>(tf.values.size()))));
  return fp;
}

/// Full chain for one burst: Gabor transform, normalisation, feature extraction.
inline Fingerprint fingerprint_burst(const GaborAnalyzer& analyzer, const ComplexBurst& burst,
                                     std::uint32_t realization) {
  const TimeFrequencyMatrix tf = normalize_tf(analyzer.transform(burst.samples));
  return gen_fingerprint(tf, FingerprintMeta{burst.radio_id, std::nullopt, burst.snr_db, realization});
}

}  // namespace rfdna
