#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rfdna/cohort.hpp"
#include "rfdna/dataset.hpp"
#include "rfdna/errors.hpp"
#include "rfdna/featsel.hpp"
#include "rfdna/feature_map.hpp"
#include "rfdna/modelsel.hpp"
#include "rfdna/report.hpp"
#include "rfdna/seed.hpp"
#include "rfdna/svm.hpp"

namespace rfdna {

struct ExperimentConfig {
  std::vector<double> snr_grid;       // ascending; evaluated high to low
  std::size_t n_z = 10;               // training noise realizations
  std::size_t n_eval = 1;             // held-out realizations used for TVR / FVR
  std::size_t k_folds = 5;
  std::size_t n_b = 900;              // class-one training fingerprints per realization
  std::size_t n_bursts = 1000;        // N_B
  double class2_ratio = 1.2;          // per other radio, relative to n_b
  std::vector<std::size_t> nr_grid;   // candidate retained-feature counts
  std::vector<Method> methods{Method::ReliefF};
  std::uint64_t master_seed = 20190601;

  CaptureSettings capture;
  GaborParams gabor;
  SvmOptions svm;
  std::size_t pmf_bins = kDefaultPmfBins;

  std::size_t relief_neighbors = 10;
  double ttest_alpha = 0.05;
  std::size_t bc_bins = 0;
  PoeaccOptions poeacc;
  NcaOptions nca;
  std::size_t nca_max_rows = 300;
  RelevanceOptions relevance;

  static ExperimentConfig defaults() {
    ExperimentConfig c;
    for (int s = -3; s <= 27; s += 3) c.snr_grid.push_back(s);
    for (std::size_t n = 1; n <= 200; ++n) c.nr_grid.push_back(n);
    return c;
  }

  std::size_t realizations() const noexcept { return n_z + n_eval; }

  std::size_t class2_per_radio() const noexcept {
    return std::min(n_bursts, static_cast<std::size_t>(std::llround(class2_ratio * static_cast<double>(n_b))));
  }

  void validate() const {
    if (!std::is_sorted(snr_grid.begin(), snr_grid.end())) fail(ErrorCode::InvalidParams, "snr_grid must be sorted");
    if (n_z == 0 || n_eval == 0) fail(ErrorCode::InvalidParams, "n_z and n_eval must be positive");
    if (k_folds < 2) fail(ErrorCode::InvalidParams, "k_folds must be at least 2");
    if (n_b == 0 || n_b > n_bursts) fail(ErrorCode::InvalidParams, "need 0 < N_b <= N_B");
    if (nr_grid.empty()) fail(ErrorCode::InvalidParams, "nr_grid is empty");
    for (std::size_t n : nr_grid)
      if (n == 0 || n > kNumFeatures) fail(ErrorCode::InvalidParams, "nr_grid entries must lie in [1, 204]");
    if (methods.empty()) fail(ErrorCode::InvalidParams, "no feature-selection methods");
    if (!(class2_ratio > 0.0)) fail(ErrorCode::InvalidParams, "class2_ratio must be positive");
    gabor.validate();
  }
};

inline nlohmann::json config_to_json(const ExperimentConfig& c) {
  std::vector<std::string> methods;
  for (Method m : c.methods) methods.emplace_back(method_name(m));
  return {{"snr_grid", c.snr_grid},
          {"n_z", c.n_z},
          {"n_eval", c.n_eval},
          {"k_folds", c.k_folds},
          {"n_b", c.n_b},
          {"n_bursts", c.n_bursts},
          {"class2_ratio", c.class2_ratio},
          {"nr_grid", c.nr_grid},
          {"methods", methods},
          {"master_seed", c.master_seed},
          {"capture",
           {{"template_len", c.capture.template_len},
            {"block_len", c.capture.block_len},
            {"filter_order", c.capture.filter.order},
            {"filter_cutoff", c.capture.filter.cutoff},
            {"detect_window", c.capture.detect_window},
            {"detect_threshold", c.capture.detect_threshold},
            {"sample_rate", c.capture.sample_rate}}},
          {"gabor", {{"M", c.gabor.M}, {"K_G", c.gabor.K_G}, {"N_delta", c.gabor.N_delta}, {"window_sigma", c.gabor.window_sigma}}},
          {"svm", {{"C", c.svm.C}, {"zeta", c.svm.zeta}, {"tolerance", c.svm.tolerance}, {"max_updates", c.svm.max_updates}}},
          {"pmf_bins", c.pmf_bins},
          {"relief_neighbors", c.relief_neighbors},
          {"ttest_alpha", c.ttest_alpha},
          {"bc_bins", c.bc_bins},
          {"poeacc", {{"w_rho", c.poeacc.w_rho}, {"w_alpha", c.poeacc.w_alpha}}},
          {"nca",
           {{"regularizer", c.nca.regularizer},
            {"kernel_width", c.nca.kernel_width},
            {"iterations", c.nca.iterations},
            {"max_rows", c.nca_max_rows}}},
          {"relevance",
           {{"epochs", c.relevance.epochs},
            {"prototype_rate", c.relevance.prototype_rate},
            {"relevance_rate", c.relevance.relevance_rate}}}};
}

/// Missing keys keep their defaults.
inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig c = ExperimentConfig::defaults();
  try {
    auto get = [&](const nlohmann::json& obj, const char* key, auto& dst) {
      if (obj.contains(key)) dst = obj.at(key).get<std::decay_t<decltype(dst)>>();
    };
    get(j, "snr_grid", c.snr_grid);
    get(j, "n_z", c.n_z);
    get(j, "n_eval", c.n_eval);
    get(j, "k_folds", c.k_folds);
    get(j, "n_b", c.n_b);
    get(j, "n_bursts", c.n_bursts);
    get(j, "class2_ratio", c.class2_ratio);
    get(j, "master_seed", c.master_seed);
    get(j, "pmf_bins", c.pmf_bins);
    get(j, "relief_neighbors", c.relief_neighbors);
    get(j, "ttest_alpha", c.ttest_alpha);
    get(j, "bc_bins", c.bc_bins);
    if (j.contains("nr_grid")) {
      const auto& g = j.at("nr_grid");
      if (g.is_object()) {
        // {"start": a, "stop": b, "step": s}
        c.nr_grid.clear();
        const std::size_t a = g.value("start", std::size_t{1}), b = g.value("stop", std::size_t{200}),
                          s = g.value("step", std::size_t{1});
        if (s == 0) fail(ErrorCode::InvalidParams, "nr_grid step must be positive");
        for (std::size_t n = a; n <= b; n += s) c.nr_grid.push_back(n);
      } else {
        c.nr_grid = g.get<std::vector<std::size_t>>();
      }
    }
    if (j.contains("methods")) {
      c.methods.clear();
      for (const auto& m : j.at("methods")) c.methods.push_back(parse_method(m.get<std::string>()));
    }
    if (j.contains("capture")) {
      const auto& k = j.at("capture");
      get(k, "template_len", c.capture.template_len);
      get(k, "block_len", c.capture.block_len);
      get(k, "filter_order", c.capture.filter.order);
      get(k, "filter_cutoff", c.capture.filter.cutoff);
      get(k, "detect_window", c.capture.detect_window);
      get(k, "detect_threshold", c.capture.detect_threshold);
      get(k, "sample_rate", c.capture.sample_rate);
    }
    if (j.contains("gabor")) {
      const auto& k = j.at("gabor");
      get(k, "M", c.gabor.M);
      get(k, "K_G", c.gabor.K_G);
      get(k, "N_delta", c.gabor.N_delta);
      get(k, "window_sigma", c.gabor.window_sigma);
    }
    if (j.contains("svm")) {
      const auto& k = j.at("svm");
      get(k, "C", c.svm.C);
      get(k, "zeta", c.svm.zeta);
      get(k, "tolerance", c.svm.tolerance);
      get(k, "max_updates", c.svm.max_updates);
    }
    if (j.contains("poeacc")) {
      get(j.at("poeacc"), "w_rho", c.poeacc.w_rho);
      get(j.at("poeacc"), "w_alpha", c.poeacc.w_alpha);
    }
    if (j.contains("nca")) {
      const auto& k = j.at("nca");
      get(k, "regularizer", c.nca.regularizer);
      get(k, "kernel_width", c.nca.kernel_width);
      get(k, "iterations", c.nca.iterations);
      get(k, "max_rows", c.nca_max_rows);
    }
    if (j.contains("relevance")) {
      const auto& k = j.at("relevance");
      get(k, "epochs", c.relevance.epochs);
      get(k, "prototype_rate", c.relevance.prototype_rate);
      get(k, "relevance_rate", c.relevance.relevance_rate);
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::FormatError, std::string("experiment config: ") + e.what());
  }
  std::sort(c.snr_grid.begin(), c.snr_grid.end());
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------
// Training set for one claimed identity

/// Rows are grouped by training realization; inside each group come the
/// claimed radio's n_b rows followed by each other authorized radio's rows.
struct ClaimTrainingData {
  std::string claimed_id;
  Eigen::MatrixXd F;
  std::vector<int> y;
  std::vector<std::size_t> radio_of_row;  // index into other_ids, or npos for the claimed radio
  std::vector<std::string> other_ids;
  std::size_t rows_per_realization = 0;
  std::size_t n_z = 0;

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  LabeledFingerprintSet labeled() const { return {F, y}; }
};

/// Reads only the trial's authorized radios.
inline ClaimTrainingData build_claim_data(const TrialConfig& trial, const std::string& claimed_id,
                                          const FingerprintDataset& ds, const ExperimentConfig& cfg) {
  if (!trial.is_authorized(claimed_id))
    fail(ErrorCode::InvalidInput, "'" + claimed_id + "' is not authorized in " + trial.trial_id);
  if (ds.realizations() < cfg.n_z) fail(ErrorCode::MissingData, "dataset has too few noise realizations");
  ClaimTrainingData d;
  d.claimed_id = claimed_id;
  d.n_z = cfg.n_z;
  for (const auto& id : trial.authorized_ids)
    if (id != claimed_id) d.other_ids.push_back(id);
  const std::size_t n2 = cfg.class2_per_radio();
  d.rows_per_realization = cfg.n_b + n2 * d.other_ids.size();
  d.F.resize(static_cast<Eigen::Index>(d.rows_per_realization * cfg.n_z), static_cast<Eigen::Index>(kNumFeatures));
  Eigen::Index r = 0;
  for (std::size_t z = 0; z < cfg.n_z; ++z) {
    const std::size_t zs[1] = {z};
    const Eigen::MatrixXd own = ds.matrix(claimed_id, cfg.n_b, zs);
    d.F.middleRows(r, own.rows()) = own;
    r += own.rows();
    d.y.insert(d.y.end(), static_cast<std::size_t>(own.rows()), 1);
    d.radio_of_row.insert(d.radio_of_row.end(), static_cast<std::size_t>(own.rows()), ClaimTrainingData::npos);
    for (std::size_t k = 0; k < d.other_ids.size(); ++k) {
      const Eigen::MatrixXd oth = ds.matrix(d.other_ids[k], n2, zs);
      d.F.middleRows(r, oth.rows()) = oth;
      r += oth.rows();
      d.y.insert(d.y.end(), static_cast<std::size_t>(oth.rows()), -1);
      d.radio_of_row.insert(d.radio_of_row.end(), static_cast<std::size_t>(oth.rows()), k);
    }
  }
  return d;
}

// ---------------------------------------------------------------------------
// Ranking

struct MethodOutput {
  Method method = Method::ReliefF;
  std::optional<FeatureRanking> ranking;
  std::optional<ProjectionBasis> projection;

  std::size_t max_dim() const {
    if (ranking) return ranking->order.size();
    return static_cast<std::size_t>(projection->basis.cols());
  }

  FeatureMap map(std::size_t n) const {
    if (ranking) return FeatureMap::select(select_top(*ranking, n), kNumFeatures);
    return FeatureMap::project(*projection, n);
  }
};

namespace detail {

/// Stratified seeded subsample keeping class proportions.
inline LabeledFingerprintSet subsample(const LabeledFingerprintSet& set, std::size_t max_rows, std::uint64_t seed) {
  if (max_rows == 0 || set.rows() <= max_rows) return set;
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < set.rows(); ++i) (set.y[i] > 0 ? pos : neg).push_back(i);
  std::shuffle(pos.begin(), pos.end(), rng);
  std::shuffle(neg.begin(), neg.end(), rng);
  const double frac = static_cast<double>(max_rows) / static_cast<double>(set.rows());
  const std::size_t np = std::max<std::size_t>(2, static_cast<std::size_t>(std::llround(frac * static_cast<double>(pos.size()))));
  const std::size_t nn = std::max<std::size_t>(2, max_rows > np ? max_rows - np : 2);
  pos.resize(std::min(np, pos.size()));
  neg.resize(std::min(nn, neg.size()));
  std::vector<std::size_t> keep(pos);
  keep.insert(keep.end(), neg.begin(), neg.end());
  std::sort(keep.begin(), keep.end());
  LabeledFingerprintSet out;
  out.F.resize(static_cast<Eigen::Index>(keep.size()), set.F.cols());
  for (std::size_t k = 0; k < keep.size(); ++k) {
    out.F.row(static_cast<Eigen::Index>(k)) = set.F.row(static_cast<Eigen::Index>(keep[k]));
    out.y.push_back(set.y[keep[k]]);
  }
  return out;
}

}  // namespace detail

/// Seeds everything random in one (claimed id, method) training run.
inline std::uint64_t claim_seed_key(const std::string& claimed_id, Method method) {
  return id_key(claimed_id) ^ mix64(static_cast<std::uint64_t>(method) + 1);
}

inline MethodOutput run_method(Method method, const LabeledFingerprintSet& set, const ExperimentConfig& cfg,
                               std::uint64_t claim_key) {
  MethodOutput out;
  out.method = method;
  switch (method) {
    case Method::DRA: {
      RelevanceOptions opt = cfg.relevance;
      opt.seed = derive_seed(cfg.master_seed, SeedStream::Relevance, {claim_key});
      out.ranking = rank_dra(train_grlvq_relevance(set, opt).relevance);
      break;
    }
    case Method::LDA: out.projection = project_lda(set); break;
    case Method::PCA: {
      const std::size_t top = *std::max_element(cfg.nr_grid.begin(), cfg.nr_grid.end());
      out.projection = project_pca(set, std::min(top, set.features()));
      break;
    }
    case Method::NCA:
      out.ranking = rank_nca(
          detail::subsample(set, cfg.nca_max_rows, derive_seed(cfg.master_seed, SeedStream::Subsample, {claim_key})),
          cfg.nca);
      break;
    case Method::POEACC: out.ranking = rank_poeacc(set, cfg.poeacc); break;
    case Method::BC: out.ranking = rank_bc(set, cfg.bc_bins); break;
    case Method::TTest: out.ranking = rank_ttest(set, cfg.ttest_alpha); break;
    case Method::ReliefF: out.ranking = rank_relieff(set, {cfg.relief_neighbors}); break;
  }
  if (out.max_dim() == 0) fail(ErrorCode::InvalidCount, std::string(method_name(method)) + " retained no features");
  return out;
}

// ---------------------------------------------------------------------------
// N_r sweep with cross-validation

struct TrainingOutcome {
  std::string claimed_id;
  Method method = Method::ReliefF;
  MethodOutput selection;
  std::vector<CandidateModel> candidates;  // one per effective N_r, ascending
  std::size_t selected = 0;

  const CandidateModel& best() const { return candidates.at(selected); }
};

namespace detail {

/// Candidate N_r values clamped to what the method can supply, unique and ascending.
inline std::vector<std::size_t> effective_grid(const std::vector<std::size_t>& grid, std::size_t max_dim) {
  std::set<std::size_t> s;
  for (std::size_t n : grid) s.insert(std::min(n, max_dim));
  return {s.begin(), s.end()};
}

/// Each fold receives every k-th member of a seeded shuffle, per class, so
/// both classes appear in every fold.
inline std::vector<std::size_t> assign_folds(std::span<const int> y, std::size_t k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> fold(y.size());
  for (int label : {1, -1}) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < y.size(); ++i)
      if (y[i] == label) idx.push_back(i);
    std::shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t t = 0; t < idx.size(); ++t) fold[idx[t]] = t % k;
  }
  return fold;
}

struct BestFit {
  bool set = false;
  double error = 0.0;
  std::vector<Eigen::Index> rows;  // rows of the claim matrix used for training
  SmoResult smo;
};

}  // namespace detail

/// For every N_r, trains k_folds x n_z models (one per realization and fold)
/// and keeps the one with the lowest held-out-fold error; the N_r candidates
/// are then compared with select_best.
inline TrainingOutcome train_best_model(const TrialConfig& trial, const std::string& claimed_id, Method method,
                                        const FingerprintDataset& ds, const ExperimentConfig& cfg) {
  const ClaimTrainingData data = build_claim_data(trial, claimed_id, ds, cfg);
  const std::uint64_t claim_key = claim_seed_key(claimed_id, method);

  TrainingOutcome out;
  out.claimed_id = claimed_id;
  out.method = method;
  out.selection = run_method(method, data.labeled(), cfg, claim_key);
  const std::vector<std::size_t> grid = detail::effective_grid(cfg.nr_grid, out.selection.max_dim());
  const std::size_t top = grid.back();

  // Largest map, scaled once; smaller N_r use its leading columns.
  const FeatureMap full_map = out.selection.map(top);
  const Eigen::MatrixXd X = full_map.apply_rows(data.F);
  const Scaler scaler = Scaler::fit(X);
  const Eigen::MatrixXd Z = scaler.apply_rows(X);

  const auto per_z = static_cast<Eigen::Index>(data.rows_per_realization);
  std::vector<detail::BestFit> best(grid.size());
  const SmoOptions smo{cfg.svm.C, cfg.svm.tolerance, cfg.svm.max_updates};

  for (std::size_t z = 0; z < cfg.n_z; ++z) {
    const Eigen::Index r0 = static_cast<Eigen::Index>(z) * per_z;
    const std::span<const int> yz(data.y.data() + r0, static_cast<std::size_t>(per_z));
    const auto folds = detail::assign_folds(
        yz, cfg.k_folds, derive_seed(cfg.master_seed, SeedStream::Fold, {claim_key, static_cast<std::uint64_t>(z)}));

    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(per_z, per_z);
    std::size_t have = 0;
    for (std::size_t g = 0; g < grid.size(); ++g) {
      const std::size_t nr = grid[g];
      const Eigen::MatrixXd block = Z.block(r0, static_cast<Eigen::Index>(have), per_z, static_cast<Eigen::Index>(nr - have));
      D += squared_distances(block, block);
      have = nr;
      const double zeta = cfg.svm.zeta > 0.0 ? cfg.svm.zeta : 1.0 / static_cast<double>(nr);
      const Eigen::MatrixXd K = (-zeta * D.array()).exp().matrix();

      for (std::size_t f = 0; f < cfg.k_folds; ++f) {
        std::vector<Eigen::Index> tr, te;
        for (Eigen::Index i = 0; i < per_z; ++i) (folds[static_cast<std::size_t>(i)] == f ? te : tr).push_back(i);
        if (te.empty()) continue;
        std::vector<int> ytr;
        for (auto i : tr) ytr.push_back(yz[static_cast<std::size_t>(i)]);
        const Eigen::MatrixXd Ktr = K(tr, tr);
        SmoResult r = solve_smo(Ktr, ytr, smo);
        if (!r.converged)
          fail(ErrorCode::TrainingFailed, claimed_id + ": solver did not converge at N_r = " + std::to_string(nr));

        std::vector<Eigen::Index> sv;
        for (Eigen::Index t = 0; t < r.alpha.size(); ++t)
          if (r.alpha(t) > 0.0) sv.push_back(t);
        Eigen::VectorXd coef(static_cast<Eigen::Index>(sv.size()));
        std::vector<Eigen::Index> sv_rows;
        for (std::size_t s = 0; s < sv.size(); ++s) {
          coef(static_cast<Eigen::Index>(s)) = r.alpha(sv[s]) * ytr[static_cast<std::size_t>(sv[s])];
          sv_rows.push_back(tr[static_cast<std::size_t>(sv[s])]);
        }
        const Eigen::VectorXd fte = (K(te, sv_rows) * coef).array() - r.rho;
        std::size_t wrong = 0;
        for (std::size_t t = 0; t < te.size(); ++t)
          if (decide_score(fte(static_cast<Eigen::Index>(t))) != yz[static_cast<std::size_t>(te[t])]) ++wrong;
        const double err = static_cast<double>(wrong) / static_cast<double>(te.size());

        auto& b = best[g];
        if (!b.set || err < b.error) {
          b.set = true;
          b.error = err;
          b.rows.clear();
          for (auto i : tr) b.rows.push_back(r0 + i);
          b.smo = std::move(r);
        }
      }
    }
  }

  // Candidate metrics over every training-realization fingerprint.
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const std::size_t nr = grid[g];
    const auto& b = best[g];
    const double zeta = cfg.svm.zeta > 0.0 ? cfg.svm.zeta : 1.0 / static_cast<double>(nr);
    const Eigen::MatrixXd Zn = Z.leftCols(static_cast<Eigen::Index>(nr));
    std::vector<int> ytr;
    for (auto i : b.rows) ytr.push_back(data.y[static_cast<std::size_t>(i)]);
    const Eigen::MatrixXd Ztr = Zn(b.rows, Eigen::all);

    CandidateModel c;
    c.n_r = nr;
    c.cv_error = b.error;
    c.model = assemble_model(b.smo, Ztr, ytr, out.selection.map(nr), scaler.head(nr), zeta, cfg.svm.C);

    const Eigen::VectorXd f = (rbf_kernel(Zn, c.model.support_vectors, zeta) * c.model.dual_coeffs).array() + c.model.bias;
    std::vector<double> mpos, mneg;
    std::vector<std::size_t> acc_other(data.other_ids.size(), 0), n_other(data.other_ids.size(), 0);
    std::size_t acc_own = 0;
    for (Eigen::Index i = 0; i < f.size(); ++i) {
      const int d = decide_score(f(i));
      const auto k = data.radio_of_row[static_cast<std::size_t>(i)];
      if (k == ClaimTrainingData::npos) {
        mpos.push_back(margin_of(f(i), 1));
        acc_own += d > 0;
      } else {
        mneg.push_back(margin_of(f(i), -1));
        acc_other[k] += d > 0;
        ++n_other[k];
      }
    }
    c.tvr_train = static_cast<double>(acc_own) / static_cast<double>(mpos.size());
    for (std::size_t k = 0; k < acc_other.size(); ++k)
      c.fvr_others_train =
          std::max(c.fvr_others_train, static_cast<double>(acc_other[k]) / static_cast<double>(n_other[k]));
    c.pmf_pair = margin_pmfs(mpos, mneg, cfg.pmf_bins);
    out.candidates.push_back(std::move(c));
  }
  out.selected = select_best_index(out.candidates);
  return out;
}

// ---------------------------------------------------------------------------
// Evaluation

/// Held-out realizations only: every burst of realizations n_z .. n_z+n_eval-1.
inline std::vector<std::size_t> evaluation_realizations(const ExperimentConfig& cfg) {
  std::vector<std::size_t> zs(cfg.n_eval);
  std::iota(zs.begin(), zs.end(), cfg.n_z);
  return zs;
}

inline RateOutcome present(const SvmModel& model, const std::string& radio, const FingerprintDataset& ds,
                           const ExperimentConfig& cfg) {
  const auto zs = evaluation_realizations(cfg);
  const Eigen::VectorXd f = score_rows(model, ds.matrix(radio, ds.bursts(), zs));
  std::size_t acc = 0;
  for (Eigen::Index i = 0; i < f.size(); ++i) acc += decide_score(f(i)) > 0;
  return make_rate(radio, static_cast<std::size_t>(f.size()), acc);
}

/// Every authorized radio is verified under its own id; the other five and
/// all twelve rogues then present that id.
inline VerificationReport evaluate_trial(const TrialConfig& trial, const FingerprintDataset& ds, Method method,
                                         const std::map<std::string, SvmModel>& models, const ExperimentConfig& cfg) {
  trial.validate();
  for (const auto& [id, m] : models)
    if (!trial.is_authorized(id)) fail(ErrorCode::InvalidModel, "model for '" + id + "' is not an authorized radio");
  if (ds.realizations() < cfg.n_z + cfg.n_eval)
    fail(ErrorCode::MissingData, "dataset lacks held-out realizations");

  VerificationReport rep;
  rep.trial_id = trial.trial_id;
  rep.snr_db = ds.snr();
  rep.method = method;
  for (const auto& claimed : trial.authorized_ids) {
    const auto it = models.find(claimed);
    if (it == models.end()) fail(ErrorCode::InvalidModel, "no model for claimed id '" + claimed + "'");
    const SvmModel& m = it->second;
    ClaimOutcome c;
    c.claimed_id = claimed;
    c.n_r = m.dim();
    if (m.features.kind == FeatureMap::Kind::Indices) c.features = m.features.indices;
    c.zeta = m.zeta;
    c.cost_C = m.cost_C;
    c.support_vectors = m.support_count();
    c.verification = present(m, claimed, ds, cfg);
    for (const auto& other : trial.authorized_ids)
      if (other != claimed) c.others.push_back(present(m, other, ds, cfg));
    for (const auto& rogue : trial.rogue_ids) c.rogues.push_back(present(m, rogue, ds, cfg));
    rep.claims.push_back(std::move(c));
  }
  return rep;
}

struct TrialRun {
  VerificationReport report;
  std::vector<TrainingOutcome> training;    // parallel to trial.authorized_ids
  std::set<std::string> training_access;  // radios read while training and selecting models
};

inline TrialRun run_trial(const TrialConfig& trial, const FingerprintDataset& ds, Method method,
                          const ExperimentConfig& cfg) {
  TrialRun run;
  std::map<std::string, SvmModel> models;
  ds.clear_access_log();
  for (const auto& id : trial.authorized_ids) {
    run.training.push_back(train_best_model(trial, id, method, ds, cfg));
    models.emplace(id, run.training.back().best().model);
  }
  run.training_access = ds.access_log();
  run.report = evaluate_trial(trial, ds, method, models, cfg);
  return run;
}

/// SNRs from high to low. A (trial, method) pair that misses the gates stays
/// in the sweep but is flagged eliminated at every lower SNR.
using ReportCallback = std::function<void(const VerificationReport&, const TrialRun&)>;

inline std::vector<VerificationReport> snr_sweep(const ExperimentConfig& cfg, const CaptureSet& captures,
                                                 const std::vector<TrialConfig>& trials,
                                                 const ReportCallback& on_report = {}) {
  cfg.validate();
  std::vector<VerificationReport> reports;
  std::set<std::pair<std::string, Method>> eliminated;
  for (auto it = cfg.snr_grid.rbegin(); it != cfg.snr_grid.rend(); ++it) {
    const FingerprintDataset ds =
        generate_dataset(captures, *it, cfg.realizations(), cfg.gabor, cfg.capture.filter, cfg.master_seed);
    for (const auto& trial : trials)
      for (Method m : cfg.methods) {
        TrialRun run = run_trial(trial, ds, m, cfg);
        run.report.eliminated = eliminated.count({trial.trial_id, m}) != 0;
        if (!run.report.meets_gates()) eliminated.insert({trial.trial_id, m});
        if (on_report) on_report(run.report, run);
        reports.push_back(std::move(run.report));
      }
  }
  return reports;
}

/// Mean TVR over every claim of the reports at one SNR and method.
inline double cohort_mean_tvr(const std::vector<VerificationReport>& reports, double snr, Method method) {
  double s = 0.0;
  std::size_t n = 0;
  for (const auto& r : reports)
    if (r.snr_db && *r.snr_db == snr && r.method == method)
      for (const auto& c : r.claims) s += c.tvr(), ++n;
  if (n == 0) fail(ErrorCode::MissingData, "no reports at the requested SNR");
  return s / static_cast<double>(n);
}

}  // namespace rfdna
