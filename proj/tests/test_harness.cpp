#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "rfdna/fingerprint_store.hpp"
#include "rfdna/harness.hpp"

using namespace rfdna;

namespace {

constexpr std::size_t kDominant = 17;
constexpr std::size_t kWeak = 40;

// Radio k sits at 3k on the dominant feature; feature 40 carries a weak,
// shared cue and the rest is unit noise. `clone_of` maps extra ids onto an
// existing radio's distribution.
FingerprintDataset toy_dataset(const std::vector<std::string>& ids, std::size_t bursts, std::size_t nz,
                               std::uint64_t seed, double spread = 0.3,
                               const std::map<std::string, std::size_t>& clone_of = {}) {
  FingerprintDataset ds(21.0, bursts, nz);
  for (std::size_t k = 0; k < ids.size(); ++k) {
    const auto it = clone_of.find(ids[k]);
    const std::size_t level = it == clone_of.end() ? k : it->second;
    std::mt19937_64 rng(seed * 1000 + k);
    std::normal_distribution<double> g;
    std::vector<FeatureVector> rows(bursts * nz);
    for (auto& r : rows) {
      for (auto& v : r) v = g(rng);
      r[kDominant] = 3.0 * static_cast<double>(level) + spread * g(rng);
      r[kWeak] += 0.5 * static_cast<double>(level % 5);
    }
    ds.add(ids[k], std::move(rows));
  }
  return ds;
}

std::vector<std::string> all_ids(const TrialConfig& t) {
  std::vector<std::string> ids = t.authorized_ids;
  ids.insert(ids.end(), t.rogue_ids.begin(), t.rogue_ids.end());
  return ids;
}

ExperimentConfig small_config() {
  ExperimentConfig c = ExperimentConfig::defaults();
  c.snr_grid = {21.0};
  c.n_z = 2;
  c.n_eval = 1;
  c.k_folds = 3;
  c.n_b = 20;
  c.n_bursts = 30;
  c.nr_grid = {1, 4, 8, 16, 32, 64};
  return c;
}

const TrialConfig& trial1() {
  static const TrialConfig t = default_trials().front();
  return t;
}

// One trained run shared by the read-only checks below.
const TrialRun& shared_run() {
  static const TrialRun run = [] {
    const auto cfg = small_config();
    const auto ds = toy_dataset(all_ids(trial1()), cfg.n_bursts, cfg.realizations(), 1);
    return run_trial(trial1(), ds, Method::ReliefF, cfg);
  }();
  return run;
}

// Exhaustive one-feature oracle: the feature whose class ranges overlap least.
std::size_t best_single_feature(const ClaimTrainingData& d) {
  std::size_t best = 0;
  double best_overlap = 1e300;
  for (Eigen::Index j = 0; j < d.F.cols(); ++j) {
    std::size_t overlap = 0;
    const auto pos = d.F.col(j);
    double lo = 1e300, hi = -1e300;
    for (Eigen::Index i = 0; i < d.F.rows(); ++i)
      if (d.y[static_cast<std::size_t>(i)] > 0) lo = std::min(lo, pos(i)), hi = std::max(hi, pos(i));
    for (Eigen::Index i = 0; i < d.F.rows(); ++i)
      if (d.y[static_cast<std::size_t>(i)] < 0 && pos(i) >= lo && pos(i) <= hi) ++overlap;
    if (static_cast<double>(overlap) < best_overlap) best_overlap = static_cast<double>(overlap), best = static_cast<std::size_t>(j);
  }
  return best;
}

}  // namespace

TEST(ExperimentConfig, ClassTwoCountAndValidation) {
  auto c = small_config();
  EXPECT_EQ(c.class2_per_radio(), 24u);
  c.n_b = 900;
  c.n_bursts = 1000;
  EXPECT_EQ(c.class2_per_radio(), 1000u);  // 1080 capped at N_B
  c.n_b = 0;
  EXPECT_THROW(c.validate(), Error);
  c = small_config();
  c.nr_grid = {205};
  EXPECT_THROW(c.validate(), Error);
  c = small_config();
  c.k_folds = 1;
  EXPECT_THROW(c.validate(), Error);
}

TEST(BuildClaimData, ShapeAndLabels) {
  const auto cfg = small_config();
  const auto ds = toy_dataset(all_ids(trial1()), cfg.n_bursts, cfg.realizations(), 2);
  const auto d = build_claim_data(trial1(), trial1().authorized_ids[2], ds, cfg);
  EXPECT_EQ(d.rows_per_realization, 20u + 5u * 24u);
  EXPECT_EQ(static_cast<std::size_t>(d.F.rows()), 2u * d.rows_per_realization);
  EXPECT_EQ(std::count(d.y.begin(), d.y.end(), 1), 40);
  EXPECT_EQ(std::count(d.y.begin(), d.y.end(), -1), 240);
  EXPECT_EQ(d.other_ids.size(), 5u);
  EXPECT_THROW(build_claim_data(trial1(), trial1().rogue_ids[0], ds, cfg), Error);
}

TEST(TrainBestModel, DominantFeatureGivesFewFeatures) {
  const auto cfg = small_config();
  const auto ds = toy_dataset(all_ids(trial1()), cfg.n_bursts, cfg.realizations(), 3);
  for (const auto& id : {trial1().authorized_ids[0], trial1().authorized_ids[3]}) {
    const auto d = build_claim_data(trial1(), id, ds, cfg);
    ASSERT_EQ(best_single_feature(d), kDominant);
    const auto out = train_best_model(trial1(), id, Method::ReliefF, ds, cfg);
    const auto& m = out.best().model;
    EXPECT_LE(out.best().n_r, 8u) << id;
    const auto& idx = m.features.indices;
    EXPECT_NE(std::find(idx.begin(), idx.end(), kDominant), idx.end()) << id;
    EXPECT_EQ(out.candidates.size(), cfg.nr_grid.size());
  }
}

TEST(TrainBestModel, FullGridIsAReorderedPlainSvm) {
  auto cfg = small_config();
  cfg.nr_grid = {204};
  const auto ds = toy_dataset(all_ids(trial1()), cfg.n_bursts, cfg.realizations(), 4);
  const auto out = train_best_model(trial1(), trial1().authorized_ids[1], Method::ReliefF, ds, cfg);
  ASSERT_EQ(out.candidates.size(), 1u);
  const SvmModel& m = out.best().model;
  ASSERT_EQ(m.dim(), 204u);
  std::vector<std::size_t> sorted = m.features.indices;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t j = 0; j < 204; ++j) ASSERT_EQ(sorted[j], j);
  EXPECT_DOUBLE_EQ(m.zeta, 1.0 / 204.0);

  // Undo the ranking order: identity feature map, columns permuted back.
  SvmModel id = m;
  std::vector<std::size_t> ident(204);
  std::iota(ident.begin(), ident.end(), std::size_t{0});
  id.features = FeatureMap::select(ident, 204);
  for (std::size_t k = 0; k < 204; ++k) {
    const auto src = static_cast<Eigen::Index>(k), dst = static_cast<Eigen::Index>(m.features.indices[k]);
    id.support_vectors.col(dst) = m.support_vectors.col(src);
    id.scaler.mean(dst) = m.scaler.mean(src);
    id.scaler.spread(dst) = m.scaler.spread(src);
  }
  const std::size_t zs[1] = {cfg.n_z};
  const Eigen::MatrixXd rows = ds.matrix(trial1().authorized_ids[1], cfg.n_bursts, zs);
  const Eigen::VectorXd a = score_rows(m, rows), b = score_rows(id, rows);
  EXPECT_LE((a - b).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(TrainBestModel, ReplayIsIdentical) {
  const auto cfg = small_config();
  const auto ds = toy_dataset(all_ids(trial1()), cfg.n_bursts, cfg.realizations(), 5);
  for (Method m : {Method::ReliefF, Method::DRA, Method::NCA}) {
    const auto a = train_best_model(trial1(), trial1().authorized_ids[4], m, ds, cfg);
    const auto b = train_best_model(trial1(), trial1().authorized_ids[4], m, ds, cfg);
    EXPECT_EQ(a.best().n_r, b.best().n_r);
    EXPECT_EQ(a.best().model.support_count(), b.best().model.support_count());
    EXPECT_EQ(model_to_json(a.best().model).dump(), model_to_json(b.best().model).dump());
  }
}

TEST(TrainBestModel, EveryMethodProducesAModel) {
  auto cfg = small_config();
  cfg.nr_grid = {1, 8};
  const auto ds = toy_dataset(all_ids(trial1()), cfg.n_bursts, cfg.realizations(), 6);
  for (Method m : {Method::DRA, Method::LDA, Method::PCA, Method::NCA, Method::POEACC, Method::BC, Method::TTest,
                   Method::ReliefF}) {
    const auto out = train_best_model(trial1(), trial1().authorized_ids[0], m, ds, cfg);
    const auto& model = out.best().model;
    EXPECT_GE(model.dim(), 1u) << method_name(m);
    EXPECT_LE(model.dim(), 8u) << method_name(m);
    // dual feasibility
    EXPECT_LE(model.dual_coeffs.cwiseAbs().maxCoeff(), cfg.svm.C + 1e-12) << method_name(m);
    EXPECT_LE(std::abs(model.dual_coeffs.sum()), 1e-6) << method_name(m);
  }
}

TEST(RunTrial, TrainingNeverReadsRogues) {
  const auto& run = shared_run();
  const std::set<std::string> authorized(trial1().authorized_ids.begin(), trial1().authorized_ids.end());
  EXPECT_EQ(run.training_access, authorized);
}

TEST(RunTrial, RateIdentitiesHold) {
  const auto& rep = shared_run().report;
  ASSERT_EQ(rep.claims.size(), 6u);
  for (const auto& c : rep.claims) {
    EXPECT_EQ(c.verification.accept_rate + c.verification.reject_rate, 1.0);
    for (const auto* list : {&c.others, &c.rogues})
      for (const auto& r : *list) {
        EXPECT_EQ(r.accept_rate + r.reject_rate, 1.0);
        EXPECT_LE(r.accepted, r.presented);
      }
  }
}

TEST(RunTrial, SeventyTwoAttacksOnHeldOutData) {
  const auto cfg = small_config();
  const auto& rep = shared_run().report;
  EXPECT_EQ(rep.attack_count(), 72u);
  for (const auto& c : rep.claims) {
    EXPECT_EQ(c.others.size(), 5u);
    EXPECT_EQ(c.rogues.size(), 12u);
    // only the held-out realization is scored
    EXPECT_EQ(c.verification.presented, cfg.n_bursts * cfg.n_eval);
    for (const auto& r : c.rogues) EXPECT_EQ(r.presented, cfg.n_bursts * cfg.n_eval);
    for (const auto& r : c.rogues) EXPECT_NE(r.radio_id, c.claimed_id);
  }
}

TEST(RunTrial, SelectedCandidatesPassTrainingGates) {
  // N_r = 1 separates every claim here, so no claim needs the fallback.
  for (const auto& t : shared_run().training) {
    EXPECT_TRUE(t.best().passes_gates()) << t.claimed_id;
    EXPECT_EQ(t.candidates.front().tvr_train, 1.0) << t.claimed_id;
  }
}

TEST(RunTrial, ReplayGivesEqualReport) {
  const auto cfg = small_config();
  const auto ds = toy_dataset(all_ids(trial1()), cfg.n_bursts, cfg.realizations(), 1);
  const auto again = run_trial(trial1(), ds, Method::ReliefF, cfg);
  EXPECT_EQ(again.report, shared_run().report);
  EXPECT_EQ(report_to_json(again.report).dump(), report_to_json(shared_run().report).dump());
}

TEST(EvaluateTrial, ModelForRogueRejected) {
  const auto cfg = small_config();
  const auto ds = toy_dataset(all_ids(trial1()), cfg.n_bursts, cfg.realizations(), 1);
  std::map<std::string, SvmModel> models;
  for (std::size_t k = 0; k < 6; ++k)
    models.emplace(trial1().authorized_ids[k], shared_run().training[k].best().model);
  models.emplace(trial1().rogue_ids[0], models.begin()->second);
  try {
    evaluate_trial(trial1(), ds, Method::ReliefF, models, cfg);
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidModel);
  }
  models.erase(trial1().rogue_ids[0]);
  models.erase(trial1().authorized_ids[5]);
  EXPECT_THROW(evaluate_trial(trial1(), ds, Method::ReliefF, models, cfg), Error);
}

TEST(EvaluateTrial, ClonedRogueNoMoreAcceptedThanItsOriginal) {
  // Every rogue clones one of the claim's other authorized radios. Wider
  // spread on the dominant feature so others-FVR is not trivially zero.
  auto cfg = small_config();
  cfg.n_z = 1;
  cfg.n_eval = 2;
  cfg.n_bursts = 5000;
  cfg.nr_grid = {1, 2, 4};
  const auto& t = trial1();
  std::map<std::string, std::size_t> clone_of;
  for (std::size_t r = 0; r < t.rogue_ids.size(); ++r) clone_of[t.rogue_ids[r]] = 1 + r % 5;
  const auto ds = toy_dataset(all_ids(t), cfg.n_bursts, cfg.realizations(), 7, 1.4, clone_of);
  const auto model = train_best_model(t, t.authorized_ids[0], Method::ReliefF, ds, cfg).best().model;

  double worst_gap = -1.0;
  std::size_t nonzero = 0;
  for (std::size_t r = 0; r < t.rogue_ids.size(); ++r) {
    const auto& original = t.authorized_ids[1 + r % 5];
    const auto rogue = present(model, t.rogue_ids[r], ds, cfg);
    const auto other = present(model, original, ds, cfg);
    ASSERT_EQ(rogue.presented, 10000u);
    worst_gap = std::max(worst_gap, rogue.accept_rate - other.accept_rate);
    nonzero += other.accepted > 0;
    EXPECT_LE(rogue.accept_rate, other.accept_rate + 0.05) << t.rogue_ids[r];
  }
  EXPECT_GT(nonzero, 0u);  // the check is not vacuous
  EXPECT_LT(worst_gap, 0.05);
}

TEST(Reports, JsonRoundTrip) {
  auto rep = shared_run().report;
  rep.eliminated = true;
  const auto j = report_to_json(rep);
  EXPECT_EQ(report_from_json(j), rep);
  EXPECT_EQ(report_from_json(nlohmann::json::parse(j.dump())), rep);
  rep.snr_db = std::nullopt;
  EXPECT_EQ(report_from_json(report_to_json(rep)), rep);
  const std::vector<VerificationReport> v{shared_run().report, rep};
  EXPECT_EQ(reports_from_json(reports_to_json(v)), v);
}

TEST(Reports, CsvHasOneRowPerOutcome) {
  std::ostringstream os;
  write_results_csv(os, {shared_run().report});
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line.rfind("trial_id,snr_db,method,", 0), 0u);
  std::size_t rows = 0, authorized = 0, rogue = 0;
  while (std::getline(is, line)) {
    ++rows;
    authorized += line.find(",authorized,") != std::string::npos;
    rogue += line.find(",rogue,") != std::string::npos;
  }
  EXPECT_EQ(rows, 6u + 6u * 5u + 6u * 12u);
  EXPECT_EQ(authorized, 6u);
  EXPECT_EQ(rogue, 72u);
}

TEST(Reports, EmitWritesOnePlotFileWithSixGroups) {
  const auto dir = std::filesystem::temp_directory_path() / "rfdna_emit_test";
  std::filesystem::remove_all(dir);
  const auto files = emit_report({shared_run().report}, dir);
  std::size_t plots = 0;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    plots += entry.path().filename().string().rfind("plot_", 0) == 0;
  EXPECT_EQ(plots, 1u);
  EXPECT_EQ(files.size(), 3u);
  std::ifstream is(dir / plot_file_name(shared_run().report));
  std::string line;
  std::getline(is, line);
  std::set<std::string> groups;
  while (std::getline(is, line)) groups.insert(line.substr(0, line.find("\",") + 1));
  EXPECT_EQ(groups.size(), 6u);
  for (const auto& c : shared_run().report.claims)
    EXPECT_EQ(groups.count("\"" + c.claimed_id + " (" + std::to_string(c.n_r) + ")\""), 1u);
  EXPECT_EQ(report_from_json(read_json_file(dir / "results.json")[0]), shared_run().report);
  std::filesystem::remove_all(dir);
  EXPECT_THROW(emit_report({}, dir), Error);
}

TEST(Dataset, StoreRoundTripRebuildsTheDataset) {
  const auto ds = toy_dataset({"A", "B", "C"}, 7, 3, 9);
  std::stringstream ss;
  write_store(ss, ds.to_records());
  const auto back = FingerprintDataset::from_records(read_store(ss));
  EXPECT_EQ(back.ids(), ds.ids());
  EXPECT_EQ(back.bursts(), 7u);
  EXPECT_EQ(back.realizations(), 3u);
  EXPECT_EQ(back.snr(), ds.snr());
  const std::size_t zs[3] = {0, 1, 2};
  for (const auto& id : ds.ids()) EXPECT_EQ(back.matrix(id, 7, zs), ds.matrix(id, 7, zs));
}

TEST(Dataset, RejectsRaggedInput) {
  FingerprintDataset ds(3.0, 4, 2);
  EXPECT_THROW(ds.add("A", std::vector<FeatureVector>(7)), Error);
  ds.add("A", std::vector<FeatureVector>(8));
  EXPECT_THROW(ds.add("A", std::vector<FeatureVector>(8)), Error);
  EXPECT_THROW(ds.at("A", 4, 0), Error);
  EXPECT_THROW(ds.at("Z", 0, 0), Error);
  auto recs = toy_dataset({"A", "B"}, 3, 2, 1).to_records();
  recs.pop_back();
  EXPECT_THROW(FingerprintDataset::from_records(recs), Error);
}

TEST(SnrSweep, DescendingWithEliminationFlags) {
  // Real signal chain at a tiny scale: one trial, three SNRs.
  ExperimentConfig cfg = ExperimentConfig::defaults();
  cfg.snr_grid = {-3.0, 12.0, 27.0};
  cfg.n_z = 1;
  cfg.n_eval = 1;
  cfg.k_folds = 2;
  cfg.n_b = 12;  // Relief-F needs N_K + 1 rows per class
  cfg.n_bursts = 15;
  cfg.nr_grid = {4, 20};
  const auto cohort = default_cohort(cfg.n_bursts);
  const auto captures = capture_cohort(cohort, cfg.capture, cfg.master_seed);
  std::size_t calls = 0;
  const auto reports = snr_sweep(cfg, captures, {trial1()}, [&](const VerificationReport& r, const TrialRun& run) {
    ++calls;
    EXPECT_EQ(run.report.trial_id, r.trial_id);
    EXPECT_EQ(run.training.size(), 6u);
  });
  ASSERT_EQ(reports.size(), 3u);
  EXPECT_EQ(calls, 3u);
  EXPECT_EQ(*reports[0].snr_db, 27.0);
  EXPECT_EQ(*reports[1].snr_db, 12.0);
  EXPECT_EQ(*reports[2].snr_db, -3.0);
  EXPECT_FALSE(reports[0].eliminated);
  bool failed = false;
  for (const auto& r : reports) {
    EXPECT_EQ(r.eliminated, failed);
    failed = failed || !r.meets_gates();
    EXPECT_EQ(r.attack_count(), 72u);
  }
}
