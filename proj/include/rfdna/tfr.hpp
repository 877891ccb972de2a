#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>

#include "rfdna/errors.hpp"
#include "rfdna/signal.hpp"

namespace rfdna {

struct GaborParams {
  std::size_t M = 150;        // time shifts
  std::size_t K_G = 150;      // frequency shifts
  std::size_t N_delta = 1;    // time step
  double window_sigma = 25.0; // Gaussian spread in samples, default block_len / 6
  std::size_t block_index = 0;

  std::size_t block_len() const noexcept { return M * N_delta; }

  void validate() const {
    if (M == 0 || K_G == 0 || N_delta == 0) fail(ErrorCode::InvalidParams, "M, K_G and N_delta must be positive");
    if (block_len() % K_G != 0) fail(ErrorCode::InvalidParams, "(M * N_delta) mod K_G must be zero");
    if (K_G <= N_delta) fail(ErrorCode::InvalidParams, "K_G must exceed N_delta (oversampled transform)");
    if (!(window_sigma > 0.0)) fail(ErrorCode::InvalidParams, "window_sigma must be positive");
  }
};

/// Magnitude-squared Gabor surface, rows = time shifts, columns = frequency bins.
struct TimeFrequencyMatrix {
  Eigen::MatrixXd values;
  bool normalized = false;
  bool centered = false;
};

/// Gaussian analysis window evaluated at a circular offset d (mod L), with
/// the offset folded into [-L/2, L/2).
inline double gabor_window(long offset, std::size_t length, double sigma) {
  const long L = static_cast<long>(length);
  long d = offset % L;
  if (d < 0) d += L;
  if (d >= (L + 1) / 2) d -= L;
  const double x = static_cast<double>(d);
  return std::exp(-x * x / (2.0 * sigma * sigma));
}

/// Precomputes the window matrix and twiddle table for repeated transforms
/// with one parameter set.
class GaborAnalyzer {
 public:
  explicit GaborAnalyzer(const GaborParams& params) : params_(params) {
    params_.validate();
    const std::size_t L = params_.block_len();
    const std::size_t M = params_.M;
    const std::size_t K = params_.K_G;

    window_.resize(static_cast<Eigen::Index>(M), static_cast<Eigen::Index>(L));
    for (std::size_t m = 1; m <= M; ++m)
      for (std::size_t n = 1; n <= L; ++n)
        window_(static_cast<Eigen::Index>(m - 1), static_cast<Eigen::Index>(n - 1)) =
            gabor_window(static_cast<long>(n) - static_cast<long>(m * params_.N_delta), L, params_.window_sigma);

    twiddle_.resize(static_cast<Eigen::Index>(L), static_cast<Eigen::Index>(K));
    for (std::size_t n = 1; n <= L; ++n)
      for (std::size_t k = 0; k < K; ++k) {
        const std::size_t r = (k * n) % K;
        const double angle = -2.0 * std::numbers::pi * static_cast<double>(r) / static_cast<double>(K);
        twiddle_(static_cast<Eigen::Index>(n - 1), static_cast<Eigen::Index>(k)) = std::polar(1.0, angle);
      }
  }

  const GaborParams& params() const noexcept { return params_; }

  /// Coefficients G(m-1, k) for m = 1..M, k = 0..K_G-1.
  Eigen::MatrixXcd transform(std::span<const cplx> s) const {
    const std::size_t L = params_.block_len();
    const std::size_t offset = params_.block_index * L;
    if (s.size() < offset + L)
      fail(ErrorCode::InvalidLength, "burst supplies " + std::to_string(s.size()) + " samples, need " +
                                         std::to_string(offset + L));
    Eigen::Map<const Eigen::VectorXcd> block(s.data() + offset, static_cast<Eigen::Index>(L));
    const Eigen::MatrixXcd windowed = window_.cast<cplx>() * block.asDiagonal();
    return windowed * twiddle_;
  }

 private:
  GaborParams params_;
  Eigen::MatrixXd window_;   // M x L, real Gaussian so conjugation is a no-op
  Eigen::MatrixXcd twiddle_; // L x K_G
};

inline Eigen::MatrixXcd dgt(const ComplexBurst& burst, const GaborParams& params) {
  return GaborAnalyzer(params).transform(burst.samples);
}

/// |G|^2 / max|G|^2 with the frequency axis rotated by half the grid so that
/// bin k = 0 lands in the middle column.
inline TimeFrequencyMatrix normalize_tf(const Eigen::MatrixXcd& G) {
  const Eigen::MatrixXd power = G.cwiseAbs2();
  const double peak = power.size() > 0 ? power.maxCoeff() : 0.0;
  if (!(peak > 0.0)) fail(ErrorCode::DegenerateTF, "Gabor grid is identically zero");

  const Eigen::Index rows = power.rows();
  const Eigen::Index cols = power.cols();
  const Eigen::Index shift = cols / 2;
  TimeFrequencyMatrix tf;
  tf.values.resize(rows, cols);
  for (Eigen::Index k = 0; k < cols; ++k) tf.values.col((k + shift) % cols) = power.col(k) / peak;
  tf.normalized = true;
  tf.centered = true;
  return tf;
}

}  // namespace rfdna
