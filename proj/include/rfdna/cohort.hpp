#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rfdna/errors.hpp"
#include "rfdna/iq_io.hpp"
#include "rfdna/signal.hpp"

namespace rfdna {

inline constexpr std::size_t kAuthorizedPerTrial = 6;
inline constexpr std::size_t kRoguesPerTrial = 12;

struct TrialConfig {
  std::string trial_id;
  std::vector<std::string> authorized_ids;
  std::vector<std::string> rogue_ids;

  void validate() const {
    if (authorized_ids.size() != kAuthorizedPerTrial)
      fail(ErrorCode::InvalidParams, trial_id + ": a trial needs exactly 6 authorized radios");
    if (rogue_ids.size() != kRoguesPerTrial)
      fail(ErrorCode::InvalidParams, trial_id + ": a trial needs exactly 12 rogue radios");
    std::set<std::string> seen(authorized_ids.begin(), authorized_ids.end());
    if (seen.size() != authorized_ids.size()) fail(ErrorCode::InvalidParams, trial_id + ": duplicate authorized id");
    for (const auto& r : rogue_ids)
      if (!seen.insert(r).second) fail(ErrorCode::InvalidParams, trial_id + ": radio '" + r + "' listed twice");
  }

  bool is_authorized(const std::string& id) const {
    return std::find(authorized_ids.begin(), authorized_ids.end(), id) != authorized_ids.end();
  }
};

struct Cohort {
  std::vector<EmitterProfile> profiles;
  std::size_t bursts_per_radio = 1000;  // N_B

  const EmitterProfile& profile(const std::string& id) const {
    for (const auto& p : profiles)
      if (p.radio_id == id) return p;
    fail(ErrorCode::MissingData, "radio '" + id + "' is not in the cohort");
  }

  std::size_t index_of(const std::string& id) const {
    for (std::size_t k = 0; k < profiles.size(); ++k)
      if (profiles[k].radio_id == id) return k;
    fail(ErrorCode::MissingData, "radio '" + id + "' is not in the cohort");
  }

  std::vector<std::string> ids() const {
    std::vector<std::string> out;
    for (const auto& p : profiles) out.push_back(p.radio_id);
    return out;
  }
};

/// The three trial groupings of six authorized radios used throughout.
inline const std::array<std::array<const char*, 6>, 3>& trial_groups() {
  static const std::array<std::array<const char*, 6>, 3> groups{{
      {"MS63A7", "MS63A9", "MS66E7", "MS6373", "MS6387", "MSD905"},
      {"MS637D", "MS9993", "MSDAB9", "MSDAC9", "MSDADB", "MSDDBF"},
      {"MSC2FF", "MSDAC5", "MSDDC7", "MSDF5B", "MSDF7D", "MSDF65"},
  }};
  return groups;
}

/// Three trials: each group is authorized in turn, the other twelve radios
/// are its rogues.
inline std::vector<TrialConfig> default_trials() {
  const auto& g = trial_groups();
  std::vector<TrialConfig> trials;
  for (std::size_t t = 0; t < g.size(); ++t) {
    TrialConfig tc;
    tc.trial_id = "trial" + std::to_string(t + 1);
    for (std::size_t u = 0; u < g.size(); ++u)
      for (const char* id : g[u]) (u == t ? tc.authorized_ids : tc.rogue_ids).emplace_back(id);
    tc.validate();
    trials.push_back(std::move(tc));
  }
  return trials;
}

namespace detail {

/// Maximin Latin hypercube over `dims` impairments for `n` radios: every
/// impairment takes each of n evenly spaced levels exactly once. Among a
/// fixed set of seeded candidate designs the one whose closest pair of radios
/// (Euclidean, in level units) is farthest apart wins.
inline std::vector<std::vector<std::size_t>> maximin_levels(std::size_t n, std::size_t dims, std::size_t candidates,
                                                            std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::vector<std::size_t>> best, design(dims, std::vector<std::size_t>(n));
  double best_score = -1.0;
  for (std::size_t c = 0; c < candidates; ++c) {
    for (auto& perm : design) {
      std::iota(perm.begin(), perm.end(), std::size_t{0});
      // Fisher-Yates with plain modulo so the design is the same on every standard library
      for (std::size_t i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng() % (i + 1)]);
    }
    double closest = 1e300;
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = a + 1; b < n; ++b) {
        double d2 = 0.0;
        for (const auto& perm : design) {
          const double d = static_cast<double>(perm[a]) - static_cast<double>(perm[b]);
          d2 += d * d;
        }
        closest = std::min(closest, d2);
      }
    if (closest > best_score) best_score = closest, best = design;
  }
  return best;
}

}  // namespace detail

/// Eighteen synthetic emitters. Every impairment is spread evenly over its
/// range and the six impairments are permuted independently (maximin Latin
/// hypercube), so no two radios are close in every impairment at once.
/// Ranges are wide enough that each impairment moves the fingerprint well
/// above burst-to-burst noise at 21 dB; with narrow ranges the offset alone
/// dominates and the cohort collapses onto one axis.
inline Cohort default_cohort(std::size_t bursts_per_radio = 1000) {
  Cohort c;
  c.bursts_per_radio = bursts_per_radio;
  constexpr std::size_t n = 18;
  static const auto levels = detail::maximin_levels(n, 6, 4000, 0x5eedc0407ull);
  auto level = [](std::size_t k, double lo, double hi) {
    return lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1);
  };
  std::size_t i = 0;
  for (const auto& group : trial_groups()) {
    for (const char* id : group) {
      EmitterProfile p;
      p.radio_id = id;
      p.iq_gain_imbalance = level(levels[0][i], 0.60, 1.40);
      p.iq_phase_imbalance = level(levels[1][i], -0.60, 0.60);
      p.carrier_freq_offset = level(levels[2][i], -0.08, 0.08);
      p.phase_noise_std = level(levels[3][i], 0.002, 0.05);
      p.pa_nonlinearity = level(levels[4][i], -0.50, 0.20);
      p.ramp_time_constant = level(levels[5][i], 2.0, 60.0);
      c.profiles.push_back(std::move(p));
      ++i;
    }
  }
  return c;
}

// ---------------------------------------------------------------------------
// Manifest: {"bursts_per_radio": N_B, "profiles": [...], "trials": [...]}

inline nlohmann::json trial_to_json(const TrialConfig& t) {
  return {{"trial_id", t.trial_id}, {"authorized_ids", t.authorized_ids}, {"rogue_ids", t.rogue_ids}};
}

inline TrialConfig trial_from_json(const nlohmann::json& j) {
  TrialConfig t;
  t.trial_id = j.at("trial_id").get<std::string>();
  t.authorized_ids = j.at("authorized_ids").get<std::vector<std::string>>();
  t.rogue_ids = j.at("rogue_ids").get<std::vector<std::string>>();
  t.validate();
  return t;
}

inline nlohmann::json cohort_to_json(const Cohort& c, const std::vector<TrialConfig>& trials = {}) {
  nlohmann::json profiles = nlohmann::json::array();
  for (const auto& p : c.profiles) profiles.push_back(profile_to_json(p));
  nlohmann::json j{{"bursts_per_radio", c.bursts_per_radio}, {"profiles", profiles}};
  if (!trials.empty()) {
    j["trials"] = nlohmann::json::array();
    for (const auto& t : trials) j["trials"].push_back(trial_to_json(t));
  }
  return j;
}

inline Cohort cohort_from_json(const nlohmann::json& j) {
  try {
    Cohort c;
    c.bursts_per_radio = j.value("bursts_per_radio", std::size_t{1000});
    std::set<std::string> seen;
    for (const auto& pj : j.at("profiles")) {
      c.profiles.push_back(profile_from_json(pj));
      if (!seen.insert(c.profiles.back().radio_id).second)
        fail(ErrorCode::FormatError, "duplicate radio id '" + c.profiles.back().radio_id + "'");
    }
    if (c.bursts_per_radio == 0) fail(ErrorCode::FormatError, "bursts_per_radio must be positive");
    return c;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::FormatError, std::string("cohort manifest: ") + e.what());
  }
}

inline std::vector<TrialConfig> trials_from_json(const nlohmann::json& j) {
  if (!j.contains("trials")) return default_trials();
  std::vector<TrialConfig> out;
  try {
    for (const auto& t : j.at("trials")) out.push_back(trial_from_json(t));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::FormatError, std::string("trials: ") + e.what());
  }
  return out;
}

}  // namespace rfdna
