#pragma once

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "rfdna/errors.hpp"
#include "rfdna/fingerprint.hpp"

namespace rfdna {

namespace detail {

inline void put_u32(std::ostream& os, std::uint32_t v) {
  std::array<char, 4> b{};
  for (int i = 0; i < 4; ++i) b[static_cast<std::size_t>(i)] = static_cast<char>((v >> (8 * i)) & 0xffu);
  os.write(b.data(), 4);
}

inline void put_f64(std::ostream& os, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  std::array<char, 8> b{};
  for (int i = 0; i < 8; ++i) b[static_cast<std::size_t>(i)] = static_cast<char>((bits >> (8 * i)) & 0xffu);
  os.write(b.data(), 8);
}

inline std::uint32_t get_u32(std::istream& is) {
  std::array<unsigned char, 4> b{};
  if (!is.read(reinterpret_cast<char*>(b.data()), 4)) fail(ErrorCode::FormatError, "truncated u32");
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | b[static_cast<std::size_t>(i)];
  return v;
}

inline double get_f64(std::istream& is) {
  std::array<unsigned char, 8> b{};
  if (!is.read(reinterpret_cast<char*>(b.data()), 8)) fail(ErrorCode::FormatError, "truncated f64");
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[static_cast<std::size_t>(i)];
  return std::bit_cast<double>(v);
}

inline std::string snr_label(const SnrDb& snr) {
  if (!snr) return "clean";
  std::ostringstream os;
  os.precision(17);
  os << *snr;
  return os.str();
}

}  // namespace detail

inline constexpr std::array<char, 4> kStoreMagic{'R', 'F', 'D', 'N'};
inline constexpr std::uint32_t kStoreVersion = 1;

/// Binary fingerprint store, all fields little-endian:
///   "RFDN" | version u32 | N_f u32 | count u32 |
///   per record: id length u32, id bytes (UTF-8), snr_db f64 (NaN = clean),
///               realization u32, N_f x f64
inline void write_store(std::ostream& os, const std::vector<Fingerprint>& records) {
  os.write(kStoreMagic.data(), 4);
  detail::put_u32(os, kStoreVersion);
  detail::put_u32(os, static_cast<std::uint32_t>(kNumFeatures));
  detail::put_u32(os, static_cast<std::uint32_t>(records.size()));
  for (const Fingerprint& fp : records) {
    detail::put_u32(os, static_cast<std::uint32_t>(fp.radio_id.size()));
    os.write(fp.radio_id.data(), static_cast<std::streamsize>(fp.radio_id.size()));
    detail::put_f64(os, fp.snr_db ? *fp.snr_db : std::numeric_limits<double>::quiet_NaN());
    detail::put_u32(os, fp.realization);
    for (double v : fp.features) detail::put_f64(os, v);
  }
}

inline std::vector<Fingerprint> read_store(std::istream& is) {
  std::array<char, 4> magic{};
  if (!is.read(magic.data(), 4) || magic != kStoreMagic) fail(ErrorCode::FormatError, "bad store magic");
  const std::uint32_t version = detail::get_u32(is);
  if (version != kStoreVersion) fail(ErrorCode::FormatError, "unsupported store version " + std::to_string(version));
  const std::uint32_t nf = detail::get_u32(is);
  if (nf != kNumFeatures) fail(ErrorCode::FormatError, "store has N_f = " + std::to_string(nf));
  const std::uint32_t count = detail::get_u32(is);

  std::vector<Fingerprint> out;
  out.reserve(count);
  for (std::uint32_t r = 0; r < count; ++r) {
    Fingerprint fp;
    const std::uint32_t len = detail::get_u32(is);
    fp.radio_id.resize(len);
    if (len > 0 && !is.read(fp.radio_id.data(), len)) fail(ErrorCode::FormatError, "truncated radio id");
    const double snr = detail::get_f64(is);
    if (!std::isnan(snr)) fp.snr_db = snr;
    fp.realization = detail::get_u32(is);
    for (double& v : fp.features) v = detail::get_f64(is);
    out.push_back(std::move(fp));
  }
  return out;
}

inline void save_store(const std::filesystem::path& path, const std::vector<Fingerprint>& records) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  write_store(os, records);
  if (!os) fail(ErrorCode::IoError, "write failed: " + path.string());
}

inline std::vector<Fingerprint> load_store(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorCode::IoError, "cannot open " + path.string());
  try {
    return read_store(is);
  } catch (const Error& e) {
    fail(e.code(), path.string() + ": " + e.what());
  }
}

/// CSV with header feature_001..feature_204 followed by metadata columns.
inline void write_store_csv(std::ostream& os, const std::vector<Fingerprint>& records) {
  for (std::size_t j = 0; j < kNumFeatures; ++j) {
    char name[16];
    std::snprintf(name, sizeof name, "feature_%03zu", j + 1);
    os << name << ',';
  }
  os << "radio_id,snr_db,realization\n";
  os.precision(17);
  for (const Fingerprint& fp : records) {
    for (double v : fp.features) os << v << ',';
    os << fp.radio_id << ',' << detail::snr_label(fp.snr_db) << ',' << fp.realization << '\n';
  }
}

}  // namespace rfdna
