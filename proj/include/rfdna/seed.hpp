#pragma once

#include <cstdint>
#include <initializer_list>
#include <string_view>

namespace rfdna {

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Stream tags keep seeds for different purposes apart even when the
/// remaining coordinates coincide.
enum class SeedStream : std::uint64_t {
  Burst = 1,
  Noise = 2,
  Fold = 3,
  Relevance = 4,
  Cohort = 5,
  Subsample = 6,
};

/// Derives a child seed from a master seed and a coordinate tuple
/// (radio, burst, realization, fold, ...). The result depends only on the
/// inputs, never on call order.
inline std::uint64_t derive_seed(std::uint64_t master, SeedStream stream,
                                 std::initializer_list<std::uint64_t> coords = {}) {
  std::uint64_t h = mix64(master ^ mix64(static_cast<std::uint64_t>(stream)));
  for (std::uint64_t c : coords) h = mix64(h ^ mix64(c + 0x632be59bd9b4e019ULL));
  return h;
}

/// FNV-1a hash of a radio id, so per-radio seeds do not depend on cohort order.
constexpr std::uint64_t id_key(std::string_view id) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : id) h = (h ^ static_cast<unsigned char>(c)) * 0x100000001b3ULL;
  return h;
}

}  // namespace rfdna
