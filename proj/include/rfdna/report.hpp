#pragma once

#include <cmath>
#include <cstddef>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rfdna/errors.hpp"
#include "rfdna/featsel.hpp"
#include "rfdna/iq_io.hpp"
#include "rfdna/modelsel.hpp"
#include "rfdna/signal.hpp"

namespace rfdna {

/// Acceptance counts for one presented radio against one claimed identity.
struct RateOutcome {
  std::string radio_id;
  std::size_t presented = 0;
  std::size_t accepted = 0;
  double accept_rate = 0.0;  // TVR for the claimed radio, FVR otherwise
  double reject_rate = 0.0;  // FRR for the claimed radio, TRR otherwise

  bool operator==(const RateOutcome&) const = default;
};

inline RateOutcome make_rate(std::string id, std::size_t presented, std::size_t accepted) {
  if (presented == 0) fail(ErrorCode::MissingData, "no fingerprints presented for radio '" + id + "'");
  RateOutcome r;
  r.radio_id = std::move(id);
  r.presented = presented;
  r.accepted = accepted;
  r.accept_rate = static_cast<double>(accepted) / static_cast<double>(presented);
  r.reject_rate = static_cast<double>(presented - accepted) / static_cast<double>(presented);
  return r;
}

struct ClaimOutcome {
  std::string claimed_id;
  std::size_t n_r = 0;
  std::vector<std::size_t> features;  // retained feature indices; empty for projections
  double zeta = 0.0;
  double cost_C = 0.0;
  std::size_t support_vectors = 0;
  RateOutcome verification;          // the claimed radio itself
  std::vector<RateOutcome> others;   // other authorized radios presenting this id
  std::vector<RateOutcome> rogues;   // rogue spoofing attacks

  double tvr() const noexcept { return verification.accept_rate; }
  double frr() const noexcept { return verification.reject_rate; }

  double worst_others_fvr() const noexcept {
    double w = 0.0;
    for (const auto& o : others) w = std::max(w, o.accept_rate);
    return w;
  }

  double worst_rogue_fvr() const noexcept {
    double w = 0.0;
    for (const auto& o : rogues) w = std::max(w, o.accept_rate);
    return w;
  }

  bool meets_gates() const noexcept {
    return tvr() >= kTvrGate && worst_others_fvr() <= kFvrGate && worst_rogue_fvr() <= kFvrGate;
  }

  bool operator==(const ClaimOutcome&) const = default;
};

struct VerificationReport {
  std::string trial_id;
  SnrDb snr_db;
  Method method = Method::ReliefF;
  bool eliminated = false;  // method already failed the gates at a higher SNR
  std::vector<ClaimOutcome> claims;

  std::size_t attack_count() const noexcept {
    std::size_t n = 0;
    for (const auto& c : claims) n += c.rogues.size();
    return n;
  }

  bool meets_gates() const noexcept {
    for (const auto& c : claims)
      if (!c.meets_gates()) return false;
    return !claims.empty();
  }

  double mean_tvr() const noexcept {
    double s = 0.0;
    for (const auto& c : claims) s += c.tvr();
    return claims.empty() ? 0.0 : s / static_cast<double>(claims.size());
  }

  bool operator==(const VerificationReport&) const = default;
};

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json snr_to_json(const SnrDb& s) { return s ? nlohmann::json(*s) : nlohmann::json("clean"); }

inline SnrDb snr_from_json(const nlohmann::json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() != "clean") fail(ErrorCode::FormatError, "SNR must be a number or \"clean\"");
    return std::nullopt;
  }
  return j.get<double>();
}

inline std::string snr_tag(const SnrDb& s) {
  if (!s) return "clean";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%gdB", *s);
  return buf;
}

inline nlohmann::json rate_to_json(const RateOutcome& r) {
  return {{"radio_id", r.radio_id},
          {"presented", r.presented},
          {"accepted", r.accepted},
          {"accept_rate", r.accept_rate},
          {"reject_rate", r.reject_rate}};
}

inline RateOutcome rate_from_json(const nlohmann::json& j) {
  RateOutcome r;
  r.radio_id = j.at("radio_id").get<std::string>();
  r.presented = j.at("presented").get<std::size_t>();
  r.accepted = j.at("accepted").get<std::size_t>();
  r.accept_rate = j.at("accept_rate").get<double>();
  r.reject_rate = j.at("reject_rate").get<double>();
  return r;
}

inline nlohmann::json report_to_json(const VerificationReport& rep) {
  nlohmann::json claims = nlohmann::json::array();
  for (const auto& c : rep.claims) {
    nlohmann::json others = nlohmann::json::array(), rogues = nlohmann::json::array();
    for (const auto& o : c.others) others.push_back(rate_to_json(o));
    for (const auto& o : c.rogues) rogues.push_back(rate_to_json(o));
    claims.push_back({{"claimed_id", c.claimed_id},
                      {"n_r", c.n_r},
                      {"features", c.features},
                      {"zeta", c.zeta},
                      {"C", c.cost_C},
                      {"support_vectors", c.support_vectors},
                      {"verification", rate_to_json(c.verification)},
                      {"others", others},
                      {"rogues", rogues}});
  }
  return {{"trial_id", rep.trial_id},
          {"snr_db", snr_to_json(rep.snr_db)},
          {"method", std::string(method_name(rep.method))},
          {"eliminated", rep.eliminated},
          {"claims", claims}};
}

inline VerificationReport report_from_json(const nlohmann::json& j) {
  try {
    VerificationReport rep;
    rep.trial_id = j.at("trial_id").get<std::string>();
    rep.snr_db = snr_from_json(j.at("snr_db"));
    rep.method = parse_method(j.at("method").get<std::string>());
    rep.eliminated = j.at("eliminated").get<bool>();
    for (const auto& cj : j.at("claims")) {
      ClaimOutcome c;
      c.claimed_id = cj.at("claimed_id").get<std::string>();
      c.n_r = cj.at("n_r").get<std::size_t>();
      c.features = cj.at("features").get<std::vector<std::size_t>>();
      c.zeta = cj.at("zeta").get<double>();
      c.cost_C = cj.at("C").get<double>();
      c.support_vectors = cj.at("support_vectors").get<std::size_t>();
      c.verification = rate_from_json(cj.at("verification"));
      for (const auto& o : cj.at("others")) c.others.push_back(rate_from_json(o));
      for (const auto& o : cj.at("rogues")) c.rogues.push_back(rate_from_json(o));
      rep.claims.push_back(std::move(c));
    }
    return rep;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::FormatError, std::string("report: ") + e.what());
  }
}

inline nlohmann::json reports_to_json(const std::vector<VerificationReport>& reports) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : reports) arr.push_back(report_to_json(r));
  return arr;
}

inline std::vector<VerificationReport> reports_from_json(const nlohmann::json& j) {
  std::vector<VerificationReport> out;
  for (const auto& r : j) out.push_back(report_from_json(r));
  return out;
}

// ---------------------------------------------------------------------------
// Tables and plot data

/// One row per scenario outcome: the claimed radio (tvr/frr), each other
/// authorized radio and each rogue (fvr/trr).
inline void write_results_csv(std::ostream& os, const std::vector<VerificationReport>& reports) {
  os << "trial_id,snr_db,method,eliminated,claimed_id,n_r,role,radio_id,presented,accepted,rate,complement\n";
  os.precision(17);
  for (const auto& rep : reports)
    for (const auto& c : rep.claims) {
      auto row = [&](const char* role, const RateOutcome& r) {
        os << rep.trial_id << ',' << (rep.snr_db ? std::to_string(*rep.snr_db) : std::string("clean")) << ','
           << method_name(rep.method) << ',' << (rep.eliminated ? 1 : 0) << ',' << c.claimed_id << ',' << c.n_r << ','
           << role << ',' << r.radio_id << ',' << r.presented << ',' << r.accepted << ',' << r.accept_rate << ','
           << r.reject_rate << '\n';
      };
      row("authorized", c.verification);
      for (const auto& o : c.others) row("other", o);
      for (const auto& o : c.rogues) row("rogue", o);
    }
}

/// Plot series for one report: x groups are "claimed id (N_r)".
inline void write_plot_data(std::ostream& os, const VerificationReport& rep) {
  os << "group,series,radio_id,value\n";
  os.precision(17);
  for (const auto& c : rep.claims) {
    const std::string group = c.claimed_id + " (" + std::to_string(c.n_r) + ")";
    os << '"' << group << "\",tvr," << c.claimed_id << ',' << c.tvr() << '\n';
    for (const auto& o : c.others) os << '"' << group << "\",others_fvr," << o.radio_id << ',' << o.accept_rate << '\n';
    for (const auto& o : c.rogues) os << '"' << group << "\",rogue_fvr," << o.radio_id << ',' << o.accept_rate << '\n';
  }
}

inline std::string plot_file_name(const VerificationReport& rep) {
  return "plot_" + rep.trial_id + "_" + snr_tag(rep.snr_db) + "_" + std::string(method_name(rep.method)) + ".csv";
}

/// Writes results.csv, results.json and one plot-data file per report.
/// Returns the paths written.
inline std::vector<std::filesystem::path> emit_report(const std::vector<VerificationReport>& reports,
                                                      const std::filesystem::path& dir) {
  if (reports.empty()) fail(ErrorCode::InvalidInput, "no reports to emit");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());

  std::vector<std::filesystem::path> written;
  auto open = [&](const std::filesystem::path& p) {
    std::ofstream os(p);
    if (!os) fail(ErrorCode::IoError, "cannot open " + p.string() + " for writing");
    written.push_back(p);
    return os;
  };
  {
    auto os = open(dir / "results.csv");
    write_results_csv(os, reports);
  }
  write_json_file(dir / "results.json", reports_to_json(reports));
  written.push_back(dir / "results.json");
  for (const auto& rep : reports) {
    auto os = open(dir / plot_file_name(rep));
    write_plot_data(os, rep);
  }
  return written;
}

}  // namespace rfdna
