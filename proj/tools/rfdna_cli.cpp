// rfdna: command-line driver over a data root (RFDNA_DATA_ROOT).
//
//   <root>/cohort.json                       manifest: profiles, bursts_per_radio, trials
//   <root>/iq/<id>.cf32, <id>.json           raw bursts (cf32 LE) and sidecar
//   <root>/fingerprints/<snr>.rfdn|.csv      fingerprint store
//   <root>/rankings/<trial>/<snr>/<method>/  ranking CSV, lambda text (dra)
//   <root>/models/<trial>/<snr>/<method>/    model JSON, candidate ledger CSV
//   <root>/reports/                          report JSON, results CSV, plot data
//
// Exit status: 0 ok (and every gate met for evaluate/sweep/report),
// 1 gates missed, 2 error.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "rfdna/rfdna.hpp"

namespace fs = std::filesystem;
using namespace rfdna;

namespace {

constexpr int kGatesMissed = 1;
constexpr int kError = 2;

fs::path data_root() {
  const char* env = std::getenv("RFDNA_DATA_ROOT");
  return env && *env ? fs::path(env) : fs::path("rfdna_data");
}

void ensure_dir(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) fail(ErrorCode::IoError, "cannot create " + p.string() + ": " + ec.message());
}

SnrDb parse_snr(const std::string& s) {
  if (s == "clean") return std::nullopt;
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    fail(ErrorCode::InvalidParams, "SNR must be a number of dB or 'clean', got '" + s + "'");
  }
}

ExperimentConfig load_config(const std::string& path) {
  if (path.empty()) return ExperimentConfig::defaults();
  return config_from_json(read_json_file(path));
}

struct Manifest {
  Cohort cohort;
  std::vector<TrialConfig> trials;
};

Manifest load_manifest(const fs::path& root) {
  const auto j = read_json_file(root / "cohort.json");
  return {cohort_from_json(j), trials_from_json(j)};
}

const TrialConfig& find_trial(const std::vector<TrialConfig>& trials, const std::string& id) {
  for (const auto& t : trials)
    if (t.trial_id == id) return t;
  fail(ErrorCode::MissingData, "no trial '" + id + "' in the manifest");
}

// Raw bursts back to back, one file per radio.
CaptureSet load_captures(const fs::path& root, const Manifest& m, const ExperimentConfig& cfg) {
  CaptureSet set;
  for (const auto& p : m.cohort.profiles) {
    const auto side = sidecar_from_json(read_json_file(root / "iq" / (p.radio_id + ".json")));
    if (side.radio_id != p.radio_id) fail(ErrorCode::FormatError, "sidecar id mismatch for " + p.radio_id);
    if (side.burst_count < cfg.n_bursts)
      fail(ErrorCode::MissingData, p.radio_id + ": " + std::to_string(side.burst_count) + " bursts on disk, config needs " +
                                       std::to_string(cfg.n_bursts));
    const auto samples = read_iq(root / "iq" / (p.radio_id + ".cf32"));
    if (samples.size() != side.burst_len * side.burst_count)
      fail(ErrorCode::FormatError, p.radio_id + ": IQ length disagrees with the sidecar");
    set.ids.push_back(p.radio_id);
    auto& out = set.bursts.emplace_back();
    for (std::size_t b = 0; b < cfg.n_bursts; ++b) {
      ComplexBurst rec;
      rec.samples.assign(samples.begin() + static_cast<std::ptrdiff_t>(b * side.burst_len),
                         samples.begin() + static_cast<std::ptrdiff_t>((b + 1) * side.burst_len));
      rec.sample_rate = side.sample_rate;
      rec.radio_id = p.radio_id;
      out.push_back(capture_from_record(rec, cfg.capture));
    }
  }
  return set;
}

fs::path store_path(const fs::path& root, const SnrDb& snr) { return root / "fingerprints" / (snr_tag(snr) + ".rfdn"); }

FingerprintDataset load_dataset(const fs::path& root, const SnrDb& snr) {
  return FingerprintDataset::from_records(load_store(store_path(root, snr)));
}

fs::path run_dir(const fs::path& root, const char* kind, const std::string& trial, const SnrDb& snr, Method m) {
  return root / kind / trial / snr_tag(snr) / std::string(method_name(m));
}

int gate_status(const std::vector<VerificationReport>& reports) {
  bool ok = !reports.empty();
  for (const auto& r : reports) {
    const bool pass = r.meets_gates();
    std::cout << r.trial_id << " " << snr_tag(r.snr_db) << " " << method_name(r.method) << ": mean TVR "
              << r.mean_tvr() << (pass ? " gates met" : " gates missed") << (r.eliminated ? " (eliminated)" : "")
              << "\n";
    ok = ok && pass;
  }
  return ok ? 0 : kGatesMissed;
}

// ---------------------------------------------------------------------------

int cmd_synth(const fs::path& root, const ExperimentConfig& cfg, const std::string& manifest_in) {
  Manifest m;
  if (manifest_in.empty()) {
    m.cohort = default_cohort(cfg.n_bursts);
    m.trials = default_trials();
  } else {
    const auto j = read_json_file(manifest_in);
    m.cohort = cohort_from_json(j);
    m.trials = trials_from_json(j);
  }
  ensure_dir(root / "iq");
  for (const auto& p : m.cohort.profiles) {
    std::vector<cplx> all;
    all.reserve(m.cohort.bursts_per_radio * cfg.capture.template_len);
    for (std::size_t b = 0; b < m.cohort.bursts_per_radio; ++b) {
      const auto burst = synth_burst(p, cfg.capture.template_len, burst_seed(cfg.master_seed, p.radio_id, b),
                                     cfg.capture.sample_rate);
      all.insert(all.end(), burst.samples.begin(), burst.samples.end());
    }
    write_iq(root / "iq" / (p.radio_id + ".cf32"), all);
    IqSidecar side;
    side.sample_rate = cfg.capture.sample_rate;
    side.radio_id = p.radio_id;
    side.profile = p;
    side.seed = cfg.master_seed;
    side.burst_len = cfg.capture.template_len;
    side.burst_count = m.cohort.bursts_per_radio;
    write_json_file(root / "iq" / (p.radio_id + ".json"), sidecar_to_json(side));
  }
  write_json_file(root / "cohort.json", cohort_to_json(m.cohort, m.trials));
  std::cout << "wrote " << m.cohort.profiles.size() << " radios x " << m.cohort.bursts_per_radio << " bursts to "
            << root.string() << "\n";
  return 0;
}

int cmd_fingerprint(const fs::path& root, const ExperimentConfig& cfg, const SnrDb& snr, bool csv) {
  const auto m = load_manifest(root);
  const auto captures = load_captures(root, m, cfg);
  const auto ds = generate_dataset(captures, snr, cfg.realizations(), cfg.gabor, cfg.capture.filter, cfg.master_seed);
  ensure_dir(root / "fingerprints");
  const auto records = ds.to_records();
  save_store(store_path(root, snr), records);
  if (csv) {
    auto path = store_path(root, snr);
    path.replace_extension(".csv");
    std::ofstream os(path);
    if (!os) fail(ErrorCode::IoError, "cannot open " + path.string());
    write_store_csv(os, records);
  }
  std::cout << "wrote " << records.size() << " fingerprints to " << store_path(root, snr).string() << "\n";
  return 0;
}

int cmd_select(const fs::path& root, const ExperimentConfig& cfg, const SnrDb& snr, const std::string& trial_id,
               const std::string& claim, Method method) {
  const auto m = load_manifest(root);
  const auto& trial = find_trial(m.trials, trial_id);
  const auto ds = load_dataset(root, snr);
  const auto dir = run_dir(root, "rankings", trial_id, snr, method);
  ensure_dir(dir);
  for (const auto& id : trial.authorized_ids) {
    if (!claim.empty() && id != claim) continue;
    const auto data = build_claim_data(trial, id, ds, cfg);
    const auto out = run_method(method, data.labeled(), cfg, claim_seed_key(id, method));
    if (out.ranking) {
      std::ofstream os(dir / (id + ".csv"));
      if (!os) fail(ErrorCode::IoError, "cannot write ranking for " + id);
      write_ranking_csv(os, *out.ranking);
      if (method == Method::DRA) {
        std::ofstream lam(dir / (id + ".lambda.txt"));
        lam.precision(17);
        for (double v : out.ranking->scores) lam << v << '\n';
      }
    } else {
      write_json_file(dir / (id + ".projection.json"), feature_map_to_json(out.map(out.max_dim())));
    }
    std::cout << id << ": " << out.max_dim() << " usable dimensions\n";
  }
  return 0;
}

int cmd_train(const fs::path& root, const ExperimentConfig& cfg, const SnrDb& snr, const std::string& trial_id,
              const std::string& claim, Method method) {
  const auto m = load_manifest(root);
  const auto& trial = find_trial(m.trials, trial_id);
  const auto ds = load_dataset(root, snr);
  const auto dir = run_dir(root, "models", trial_id, snr, method);
  ensure_dir(dir);
  for (const auto& id : trial.authorized_ids) {
    if (!claim.empty() && id != claim) continue;
    const auto out = train_best_model(trial, id, method, ds, cfg);
    save_model(dir / (id + ".json"), out.best().model);
    std::ofstream os(dir / (id + ".candidates.csv"));
    if (!os) fail(ErrorCode::IoError, "cannot write candidate ledger for " + id);
    write_candidate_ledger(os, out.candidates, out.selected);
    std::cout << id << ": N_r = " << out.best().n_r << ", train TVR " << out.best().tvr_train << ", others FVR "
              << out.best().fvr_others_train << "\n";
  }
  return 0;
}

int cmd_evaluate(const fs::path& root, const ExperimentConfig& cfg, const SnrDb& snr, const std::string& trial_id,
                 Method method) {
  const auto m = load_manifest(root);
  const auto& trial = find_trial(m.trials, trial_id);
  const auto ds = load_dataset(root, snr);
  const auto dir = run_dir(root, "models", trial_id, snr, method);
  std::map<std::string, SvmModel> models;
  for (const auto& id : trial.authorized_ids) models.emplace(id, load_model(dir / (id + ".json")));
  const auto rep = evaluate_trial(trial, ds, method, models, cfg);
  ensure_dir(root / "reports");
  const auto path = root / "reports" / (trial_id + "_" + snr_tag(snr) + "_" + std::string(method_name(method)) + ".json");
  write_json_file(path, report_to_json(rep));
  std::cout << "wrote " << path.string() << "\n";
  return gate_status({rep});
}

int cmd_sweep(const fs::path& root, const ExperimentConfig& cfg, const fs::path& out_dir) {
  const auto m = load_manifest(root);
  const auto captures = load_captures(root, m, cfg);
  const auto reports = snr_sweep(cfg, captures, m.trials, [](const VerificationReport& r, const TrialRun&) {
    std::cout << "  " << r.trial_id << " " << snr_tag(r.snr_db) << " " << method_name(r.method) << " done\n"
              << std::flush;
  });
  emit_report(reports, out_dir.empty() ? root / "reports" : out_dir);
  return gate_status(reports);
}

int cmd_report(const fs::path& root, const std::vector<std::string>& inputs, const fs::path& out_dir) {
  std::vector<VerificationReport> reports;
  std::vector<fs::path> files;
  if (inputs.empty()) {
    if (fs::exists(root / "reports"))
      for (const auto& e : fs::directory_iterator(root / "reports"))
        if (e.path().extension() == ".json" && e.path().filename() != "results.json") files.push_back(e.path());
    std::sort(files.begin(), files.end());
  } else {
    files.assign(inputs.begin(), inputs.end());
  }
  for (const auto& f : files) {
    const auto j = read_json_file(f);
    if (j.is_array())
      for (auto& r : reports_from_json(j)) reports.push_back(std::move(r));
    else
      reports.push_back(report_from_json(j));
  }
  if (reports.empty()) fail(ErrorCode::MissingData, "no reports found");
  const auto written = emit_report(reports, out_dir.empty() ? root / "reports" : out_dir);
  for (const auto& p : written) std::cout << "wrote " << p.string() << "\n";
  return gate_status(reports);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RF-DNA fingerprinting and rogue-radio verification pipeline"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("-c,--config", config_path, "experiment config JSON")->check(CLI::ExistingFile);

  std::string snr_text = "21", trial_id = "trial1", claim, method_text = "relieff", manifest, out_dir;
  std::vector<std::string> inputs;
  bool csv = false;
  auto add_snr = [&](CLI::App* s) { s->add_option("--snr", snr_text, "SNR in dB or 'clean'")->capture_default_str(); };
  auto add_trial = [&](CLI::App* s) {
    s->add_option("--trial", trial_id, "trial id from the manifest")->capture_default_str();
    s->add_option("--method", method_text, "dra|lda|pca|nca|poeacc|bc|ttest|relieff")->capture_default_str();
  };

  auto* synth = app.add_subcommand("synth", "synthesize the cohort's raw IQ bursts");
  synth->add_option("--manifest", manifest, "cohort manifest JSON (default: built-in 18-radio cohort)")
      ->check(CLI::ExistingFile);
  auto* fp = app.add_subcommand("fingerprint", "capture, add noise and fingerprint at one SNR");
  add_snr(fp);
  fp->add_flag("--csv", csv, "also write the store as CSV");
  auto* sel = app.add_subcommand("select", "rank features for each claimed id of a trial");
  add_snr(sel);
  add_trial(sel);
  sel->add_option("--claim", claim, "only this authorized id");
  auto* train = app.add_subcommand("train", "sweep N_r and select one model per claimed id");
  add_snr(train);
  add_trial(train);
  train->add_option("--claim", claim, "only this authorized id");
  auto* eval = app.add_subcommand("evaluate", "verify and attack one trial with the trained models");
  add_snr(eval);
  add_trial(eval);
  auto* sweep = app.add_subcommand("sweep", "full SNR sweep over every trial and method");
  sweep->add_option("--out", out_dir, "report directory (default <root>/reports)");
  auto* report = app.add_subcommand("report", "collect report JSON into CSV, JSON and plot data");
  report->add_option("inputs", inputs, "report JSON files (default: <root>/reports/*.json)");
  report->add_option("--out", out_dir, "report directory (default <root>/reports)");

  CLI11_PARSE(app, argc, argv);

  try {
    const auto root = data_root();
    const auto cfg = load_config(config_path);
    if (*synth) return cmd_synth(root, cfg, manifest);
    const SnrDb snr = parse_snr(snr_text);
    const Method method = parse_method(method_text);
    if (*fp) return cmd_fingerprint(root, cfg, snr, csv);
    if (*sel) return cmd_select(root, cfg, snr, trial_id, claim, method);
    if (*train) return cmd_train(root, cfg, snr, trial_id, claim, method);
    if (*eval) return cmd_evaluate(root, cfg, snr, trial_id, method);
    if (*sweep) return cmd_sweep(root, cfg, out_dir);
    if (*report) return cmd_report(root, inputs, out_dir);
  } catch (const std::exception& e) {
    std::cerr << "rfdna: " << e.what() << "\n";
    return kError;
  }
  return kError;
}
