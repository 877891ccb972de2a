#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rfdna/errors.hpp"
#include "rfdna/signal.hpp"

namespace rfdna {

inline nlohmann::json profile_to_json(const EmitterProfile& p) {
  return {{"radio_id", p.radio_id},
          {"iq_gain_imbalance", p.iq_gain_imbalance},
          {"iq_phase_imbalance", p.iq_phase_imbalance},
          {"carrier_freq_offset", p.carrier_freq_offset},
          {"phase_noise_std", p.phase_noise_std},
          {"pa_nonlinearity", p.pa_nonlinearity},
          {"ramp_time_constant", p.ramp_time_constant}};
}

inline EmitterProfile profile_from_json(const nlohmann::json& j) {
  try {
    EmitterProfile p;
    p.radio_id = j.at("radio_id").get<std::string>();
    p.iq_gain_imbalance = j.value("iq_gain_imbalance", 1.0);
    p.iq_phase_imbalance = j.value("iq_phase_imbalance", 0.0);
    p.carrier_freq_offset = j.value("carrier_freq_offset", 0.0);
    p.phase_noise_std = j.value("phase_noise_std", 0.0);
    p.pa_nonlinearity = j.value("pa_nonlinearity", 0.0);
    p.ramp_time_constant = j.value("ramp_time_constant", 0.0);
    p.validate();
    return p;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::FormatError, std::string("emitter profile: ") + e.what());
  }
}

/// Writes samples as interleaved little-endian float32 I, Q with no header.
inline void write_iq(const std::filesystem::path& path, const std::vector<cplx>& samples) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  std::vector<char> buf(samples.size() * 8);
  std::size_t k = 0;
  auto put = [&](float f) {
    const auto bits = std::bit_cast<std::uint32_t>(f);
    for (int i = 0; i < 4; ++i) buf[k++] = static_cast<char>((bits >> (8 * i)) & 0xffu);
  };
  for (const auto& s : samples) {
    put(static_cast<float>(s.real()));
    put(static_cast<float>(s.imag()));
  }
  os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!os) fail(ErrorCode::IoError, "write failed: " + path.string());
}

inline std::vector<cplx> read_iq(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorCode::IoError, "cannot open " + path.string());
  std::vector<unsigned char> buf((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  if (buf.size() % 8 != 0) fail(ErrorCode::FormatError, path.string() + ": size is not a multiple of 8 bytes");
  std::vector<cplx> out(buf.size() / 8);
  auto get = [&](std::size_t off) {
    std::uint32_t bits = 0;
    for (int i = 3; i >= 0; --i) bits = (bits << 8) | buf[off + static_cast<std::size_t>(i)];
    return static_cast<double>(std::bit_cast<float>(bits));
  };
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = cplx{get(8 * i), get(8 * i + 4)};
  return out;
}

/// Sidecar describing one radio's IQ file: burst_count bursts of burst_len
/// samples stored back to back.
struct IqSidecar {
  double sample_rate = kDefaultSampleRate;
  std::string radio_id;
  EmitterProfile profile;
  std::uint64_t seed = 0;
  std::size_t burst_len = 0;
  std::size_t burst_count = 0;
};

inline nlohmann::json sidecar_to_json(const IqSidecar& s) {
  return {{"sample_rate", s.sample_rate}, {"radio_id", s.radio_id}, {"profile", profile_to_json(s.profile)},
          {"seed", s.seed}, {"burst_len", s.burst_len}, {"burst_count", s.burst_count},
          {"format", "cf32_le interleaved I/Q, no header"}};
}

inline IqSidecar sidecar_from_json(const nlohmann::json& j) {
  try {
    IqSidecar s;
    s.sample_rate = j.at("sample_rate").get<double>();
    s.radio_id = j.at("radio_id").get<std::string>();
    s.profile = profile_from_json(j.at("profile"));
    s.seed = j.at("seed").get<std::uint64_t>();
    s.burst_len = j.at("burst_len").get<std::size_t>();
    s.burst_count = j.at("burst_count").get<std::size_t>();
    return s;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::FormatError, std::string("sidecar: ") + e.what());
  }
}

inline nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) fail(ErrorCode::IoError, "cannot open " + path.string());
  try {
    return nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::FormatError, path.string() + ": " + e.what());
  }
}

inline void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream os(path);
  if (!os) fail(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  os << j.dump(2) << '\n';
  if (!os) fail(ErrorCode::IoError, "write failed: " + path.string());
}

}  // namespace rfdna
