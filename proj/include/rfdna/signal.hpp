#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "rfdna/errors.hpp"

namespace rfdna {

using cplx = std::complex<double>;

/// Signal-to-noise ratio in dB; an empty value marks a clean (noise-free) burst.
using SnrDb = std::optional<double>;

inline constexpr double kDefaultSampleRate = 20e6;
inline constexpr std::size_t kMinTemplateLength = 150;

/// Unintentional transmitter coloration of one synthetic radio.
struct EmitterProfile {
  std::string radio_id;
  double iq_gain_imbalance = 1.0;    // linear ratio Q/I
  double iq_phase_imbalance = 0.0;   // radians
  double carrier_freq_offset = 0.0;  // fraction of sample rate
  double phase_noise_std = 0.0;      // radians per sample, random-walk increment
  double pa_nonlinearity = 0.0;      // third-order coefficient
  double ramp_time_constant = 0.0;   // samples; 0 disables the turn-on ramp

  void validate() const {
    if (!(iq_gain_imbalance > 0.0)) fail(ErrorCode::InvalidParams, "iq_gain_imbalance must be > 0");
    if (!(carrier_freq_offset > -0.5 && carrier_freq_offset < 0.5))
      fail(ErrorCode::InvalidParams, "carrier_freq_offset must lie in (-0.5, 0.5)");
    if (!(phase_noise_std >= 0.0)) fail(ErrorCode::InvalidParams, "phase_noise_std must be >= 0");
    if (!(ramp_time_constant >= 0.0)) fail(ErrorCode::InvalidParams, "ramp_time_constant must be >= 0");
  }

  /// All impairments off: synth_burst then reproduces the clean template.
  static EmitterProfile identity(std::string id = "identity") {
    EmitterProfile p;
    p.radio_id = std::move(id);
    return p;
  }
};

struct ComplexBurst {
  std::vector<cplx> samples;
  double sample_rate = kDefaultSampleRate;
  std::string radio_id;
  SnrDb snr_db;  // empty == clean

  std::size_t size() const noexcept { return samples.size(); }

  double power() const noexcept {
    if (samples.empty()) return 0.0;
    double acc = 0.0;
    for (const auto& s : samples) acc += std::norm(s);
    return acc / static_cast<double>(samples.size());
  }
};

// ---------------------------------------------------------------------------
// Synthesis

/// Quiet samples that precede the turn-on of every synthetic burst.
inline std::size_t template_lead_in(std::size_t template_len) noexcept { return template_len / 5; }

/// Clean near-transient template: a quiet lead-in followed by a fixed
/// chirp-plus-tone preamble. Independent of any radio or seed.
inline std::vector<cplx> clean_template(std::size_t template_len) {
  if (template_len < kMinTemplateLength)
    fail(ErrorCode::InvalidLength, "template_len must be >= 150, got " + std::to_string(template_len));
  constexpr double two_pi = 2.0 * std::numbers::pi;
  constexpr double chirp_start = -0.06;
  constexpr double chirp_rate = 0.12 / 150.0;
  constexpr double tone = 0.035;

  std::vector<cplx> out(template_len, cplx{0.0, 0.0});
  const std::size_t lead = template_lead_in(template_len);
  for (std::size_t n = lead; n < template_len; ++n) {
    const double t = static_cast<double>(n - lead);
    const double chirp_phase = two_pi * (chirp_start * t + 0.5 * chirp_rate * t * t);
    out[n] = 0.6 * std::polar(1.0, chirp_phase) + 0.4 * std::polar(1.0, two_pi * tone * t);
  }
  return out;
}

/// Synthesizes one burst. Impairments are applied in a fixed order:
/// ramp envelope, IQ imbalance, third-order nonlinearity, carrier offset,
/// phase-noise walk. Only the phase-noise walk consumes the seed.
inline ComplexBurst synth_burst(const EmitterProfile& profile, std::size_t template_len,
                                std::uint64_t seed, double sample_rate = kDefaultSampleRate) {
  profile.validate();
  std::vector<cplx> x = clean_template(template_len);
  const std::size_t lead = template_lead_in(template_len);

  if (profile.ramp_time_constant > 0.0) {
    for (std::size_t n = lead; n < x.size(); ++n) {
      const double t = static_cast<double>(n - lead + 1);
      x[n] *= 1.0 - std::exp(-t / profile.ramp_time_constant);
    }
  }

  if (profile.iq_gain_imbalance != 1.0 || profile.iq_phase_imbalance != 0.0) {
    const double g = profile.iq_gain_imbalance;
    const double c = std::cos(profile.iq_phase_imbalance);
    const double s = std::sin(profile.iq_phase_imbalance);
    for (auto& v : x) v = cplx{v.real(), g * (c * v.imag() - s * v.real())};
  }

  if (profile.pa_nonlinearity != 0.0) {
    for (auto& v : x) v += profile.pa_nonlinearity * std::norm(v) * v;
  }

  if (profile.carrier_freq_offset != 0.0) {
    const double w = 2.0 * std::numbers::pi * profile.carrier_freq_offset;
    for (std::size_t n = 0; n < x.size(); ++n) x[n] *= std::polar(1.0, w * static_cast<double>(n));
  }

  if (profile.phase_noise_std > 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> step(0.0, profile.phase_noise_std);
    double phi = 0.0;
    for (auto& v : x) {
      phi += step(rng);
      v *= std::polar(1.0, phi);
    }
  }

  ComplexBurst burst;
  burst.samples = std::move(x);
  burst.sample_rate = sample_rate;
  burst.radio_id = profile.radio_id;
  return burst;
}

// ---------------------------------------------------------------------------
// Butterworth capture filter

struct FilterSpec {
  int order = 6;
  double cutoff = 0.3;  // fraction of Nyquist
};

/// One second-order section, a0 normalised to 1. First-order sections use b2 = a2 = 0.
struct Biquad {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;
};

/// Digital Butterworth low-pass as a cascade of second-order sections
/// (bilinear transform with frequency pre-warping, unit DC gain per section).
inline std::vector<Biquad> design_butterworth(int order, double cutoff) {
  if (!(cutoff > 0.0 && cutoff < 1.0)) fail(ErrorCode::InvalidCutoff, "cutoff must lie in (0, 1)");
  if (order < 1) fail(ErrorCode::InvalidParams, "filter order must be >= 1");

  const double warped = std::tan(std::numbers::pi * cutoff / 2.0);
  std::vector<Biquad> sections;
  for (int k = 0; k < order / 2; ++k) {
    const double theta = std::numbers::pi * (2.0 * k + 1.0 + order) / (2.0 * order);
    const cplx analog = warped * std::polar(1.0, theta);
    const cplx z = (1.0 + analog) / (1.0 - analog);
    Biquad s;
    s.a1 = -2.0 * z.real();
    s.a2 = std::norm(z);
    const double gain = (1.0 + s.a1 + s.a2) / 4.0;
    s.b0 = gain;
    s.b1 = 2.0 * gain;
    s.b2 = gain;
    sections.push_back(s);
  }
  if (order % 2 == 1) {
    const double z = (1.0 - warped) / (1.0 + warped);
    Biquad s;
    s.a1 = -z;
    const double gain = (1.0 - z) / 2.0;
    s.b0 = gain;
    s.b1 = gain;
    sections.push_back(s);
  }
  return sections;
}

/// Runs the cascade causally (forward only) over complex samples, zero initial state.
inline std::vector<cplx> apply_sections(std::span<const Biquad> sections, std::span<const cplx> input) {
  std::vector<cplx> y(input.begin(), input.end());
  for (const Biquad& s : sections) {
    cplx z1{0.0, 0.0}, z2{0.0, 0.0};  // transposed direct form II state
    for (auto& v : y) {
      const cplx in = v;
      const cplx out = s.b0 * in + z1;
      z1 = s.b1 * in - s.a1 * out + z2;
      z2 = s.b2 * in - s.a2 * out;
      v = out;
    }
  }
  return y;
}

inline ComplexBurst butterworth_filter(const ComplexBurst& burst, int order = 6, double cutoff = 0.3) {
  const auto sections = design_butterworth(order, cutoff);
  ComplexBurst out = burst;
  out.samples = apply_sections(sections, burst.samples);
  return out;
}

inline ComplexBurst butterworth_filter(const ComplexBurst& burst, const FilterSpec& spec) {
  return butterworth_filter(burst, spec.order, spec.cutoff);
}

// ---------------------------------------------------------------------------
// Transient detection

/// Variance of |x| over every length-`window` window, indexed by window start.
inline std::vector<double> amplitude_variance_trajectory(std::span<const cplx> x, std::size_t window) {
  std::vector<double> traj;
  if (x.size() < window) return traj;
  traj.resize(x.size() - window + 1);
  const double inv = 1.0 / static_cast<double>(window);
  for (std::size_t start = 0; start < traj.size(); ++start) {
    double mean = 0.0;
    for (std::size_t i = 0; i < window; ++i) mean += std::abs(x[start + i]);
    mean *= inv;
    double var = 0.0;
    for (std::size_t i = 0; i < window; ++i) {
      const double d = std::abs(x[start + i]) - mean;
      var += d * d;
    }
    traj[start] = var * inv;
  }
  return traj;
}

/// First window start whose amplitude variance exceeds threshold * (max
/// window variance over the record).
inline std::size_t detect_transient(const ComplexBurst& record, std::size_t window = 32,
                                    double threshold = 0.05) {
  if (window < 2) fail(ErrorCode::InvalidParams, "window must be >= 2");
  if (record.size() <= window) fail(ErrorCode::InvalidLength, "record must be longer than the window");
  const auto traj = amplitude_variance_trajectory(record.samples, window);
  double peak = 0.0;
  for (double v : traj) peak = std::max(peak, v);
  double amp = 0.0;
  for (const auto& v : record.samples) amp = std::max(amp, std::abs(v));
  // variance at rounding level counts as constant
  if (!(peak > 1e-24 * amp * amp)) fail(ErrorCode::NoTransientFound, "amplitude is constant over the record");
  const double level = threshold * peak;
  for (std::size_t i = 0; i < traj.size(); ++i)
    if (traj[i] > level) return i;
  fail(ErrorCode::NoTransientFound, "variance never exceeds the threshold");
}

// ---------------------------------------------------------------------------
// Like-filtered AWGN

inline constexpr std::size_t kNoiseWarmup = 256;

/// Adds complex white Gaussian noise shaped by the capture filter and scaled so
/// that (burst power) / (filtered noise power) equals the target SNR over the
/// burst duration. An empty SNR returns the input unchanged.
inline ComplexBurst add_awgn(const ComplexBurst& burst, SnrDb snr_db, const FilterSpec& filter,
                             std::uint64_t seed) {
  if (!snr_db) return burst;
  const double ps = burst.power();
  if (!(ps > 0.0)) fail(ErrorCode::DegenerateSignal, "burst has zero power");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  std::vector<cplx> w(kNoiseWarmup + burst.size());
  for (auto& v : w) {
    const double re = normal(rng);
    const double im = normal(rng);
    v = cplx{re, im};
  }
  const auto sections = design_butterworth(filter.order, filter.cutoff);
  const auto shaped = apply_sections(sections, w);
  std::span<const cplx> noise(shaped.data() + kNoiseWarmup, burst.size());

  double pn = 0.0;
  for (const auto& v : noise) pn += std::norm(v);
  pn /= static_cast<double>(burst.size());
  const double target = ps / std::pow(10.0, *snr_db / 10.0);
  const double scale = std::sqrt(target / pn);

  ComplexBurst out = burst;
  for (std::size_t i = 0; i < out.size(); ++i) out.samples[i] += scale * noise[i];
  out.snr_db = snr_db;
  return out;
}

// ---------------------------------------------------------------------------
// Capture chain

struct CaptureSettings {
  std::size_t template_len = 256;
  std::size_t block_len = 150;  // M * N_delta
  FilterSpec filter;
  std::size_t detect_window = 32;
  double detect_threshold = 0.05;
  double sample_rate = kDefaultSampleRate;
};

/// Detect the transient in a recorded burst, filter from the detected start
/// and keep exactly block_len samples. Throws InvalidLength when too few
/// samples remain after alignment.
inline ComplexBurst capture_from_record(const ComplexBurst& record, const CaptureSettings& cfg) {
  const std::size_t start = detect_transient(record, cfg.detect_window, cfg.detect_threshold);
  if (record.size() - start < cfg.block_len)
    fail(ErrorCode::InvalidLength, "burst too short after transient alignment");
  ComplexBurst aligned = record;
  aligned.samples.assign(record.samples.begin() + static_cast<std::ptrdiff_t>(start), record.samples.end());
  ComplexBurst filtered = butterworth_filter(aligned, cfg.filter);
  filtered.samples.resize(cfg.block_len);
  return filtered;
}

/// Synthesize, then capture_from_record.
inline ComplexBurst capture_near_transient(const EmitterProfile& profile, const CaptureSettings& cfg,
                                           std::uint64_t seed) {
  return capture_from_record(synth_burst(profile, cfg.template_len, seed, cfg.sample_rate), cfg);
}

}  // namespace rfdna
