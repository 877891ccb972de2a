#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rfdna/errors.hpp"
#include "rfdna/stats.hpp"

namespace rfdna {

/// Two-class training matrix. Rows are fingerprints; y = +1 marks the
/// authorized radio under verification (c1), y = -1 every other authorized
/// radio (c2).
struct LabeledFingerprintSet {
  Eigen::MatrixXd F;
  std::vector<int> y;

  std::size_t rows() const noexcept { return static_cast<std::size_t>(F.rows()); }
  std::size_t features() const noexcept { return static_cast<std::size_t>(F.cols()); }

  std::size_t count(int label) const noexcept {
    return static_cast<std::size_t>(std::count(y.begin(), y.end(), label));
  }

  void validate() const {
    if (y.size() != rows()) fail(ErrorCode::InvalidShape, "label count does not match row count");
    if (F.cols() == 0) fail(ErrorCode::InvalidShape, "no features");
    for (int v : y)
      if (v != 1 && v != -1) fail(ErrorCode::InvalidInput, "labels must be +1 or -1");
    if (count(1) == 0 || count(-1) == 0) fail(ErrorCode::InvalidInput, "both classes must be non-empty");
    if (!F.allFinite()) fail(ErrorCode::InvalidValue, "non-finite feature value");
  }

  std::vector<double> column(std::size_t r, int label) const {
    std::vector<double> out;
    for (std::size_t i = 0; i < rows(); ++i)
      if (y[i] == label) out.push_back(F(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(r)));
    return out;
  }

  Eigen::VectorXd class_mean(int label) const {
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(F.cols());
    std::size_t n = 0;
    for (std::size_t i = 0; i < rows(); ++i)
      if (y[i] == label) mu += F.row(static_cast<Eigen::Index>(i)).transpose(), ++n;
    return n ? Eigen::VectorXd(mu / static_cast<double>(n)) : mu;
  }
};

enum class Method { DRA, LDA, PCA, NCA, POEACC, BC, TTest, ReliefF };

inline constexpr std::string_view method_name(Method m) {
  switch (m) {
    case Method::DRA: return "dra";
    case Method::LDA: return "lda";
    case Method::PCA: return "pca";
    case Method::NCA: return "nca";
    case Method::POEACC: return "poeacc";
    case Method::BC: return "bc";
    case Method::TTest: return "ttest";
    case Method::ReliefF: return "relieff";
  }
  return "?";
}

inline Method parse_method(std::string_view s) {
  for (Method m : {Method::DRA, Method::LDA, Method::PCA, Method::NCA, Method::POEACC, Method::BC, Method::TTest,
                   Method::ReliefF})
    if (method_name(m) == s) return m;
  fail(ErrorCode::InvalidParams, "unknown feature-selection method '" + std::string(s) + "'");
}

inline bool is_projection(Method m) noexcept { return m == Method::LDA || m == Method::PCA; }

/// How `order` relates to `scores`.
enum class ScoreOrder {
  Descending,  // larger score is better
  Ascending,   // smaller score is better
  Greedy,      // sequential selection; score is the selection cost at the time of pick
};

struct FeatureRanking {
  Method method = Method::ReliefF;
  std::vector<double> scores;        // one per feature
  std::vector<std::size_t> order;    // best first; may omit excluded features
  ScoreOrder direction = ScoreOrder::Descending;
  std::vector<std::size_t> flagged;  // degenerate features (excluded or given a conventional value)

  std::size_t retained_count() const noexcept { return order.size(); }
};

/// Linear feature transform: LDA keeps one direction, PCA the leading N_r
/// eigenvectors. Columns of `basis` are the directions.
struct ProjectionBasis {
  Method method = Method::PCA;
  Eigen::MatrixXd basis;
  Eigen::VectorXd mean;
  Eigen::VectorXd eigenvalues;  // PCA only, descending

  Eigen::VectorXd project(const Eigen::VectorXd& f) const { return basis.transpose() * (f - mean); }
};

namespace detail {

/// Stable ordering of all features by score with ties broken by index.
inline std::vector<std::size_t> order_by(const std::vector<double>& scores, bool descending) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return descending ? scores[a] > scores[b] : scores[a] < scores[b];
  });
  return idx;
}

/// Column-wise z-scores over the whole set; zero-spread columns map to 0.
inline Eigen::MatrixXd standardize_columns(const Eigen::MatrixXd& F) {
  const Eigen::RowVectorXd mu = F.colwise().mean();
  Eigen::MatrixXd Z = F.rowwise() - mu;
  const Eigen::RowVectorXd sd = (Z.array().square().colwise().sum() / static_cast<double>(F.rows())).sqrt();
  for (Eigen::Index c = 0; c < Z.cols(); ++c) {
    if (sd(c) > 0.0)
      Z.col(c) /= sd(c);
    else
      Z.col(c).setZero();
  }
  return Z;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// DRA

/// Ranks features by a relevance vector with entries in [0, 1], largest first.
inline FeatureRanking rank_dra(std::span<const double> relevance) {
  if (relevance.empty()) fail(ErrorCode::InvalidRelevance, "empty relevance vector");
  for (double v : relevance)
    if (!(v >= 0.0 && v <= 1.0)) fail(ErrorCode::InvalidRelevance, "relevance entries must lie in [0, 1]");
  FeatureRanking r;
  r.method = Method::DRA;
  r.scores.assign(relevance.begin(), relevance.end());
  r.order = detail::order_by(r.scores, true);
  r.direction = ScoreOrder::Descending;
  return r;
}

struct RelevanceOptions {
  std::size_t epochs = 20;
  double prototype_rate = 0.002;
  double relevance_rate = 0.05;
  std::uint64_t seed = 0;
};

struct RelevanceResult {
  std::vector<double> relevance;  // max entry 1
  std::vector<double> cost_trace; // mean relative distance per epoch
  bool converged = false;
};

/// Relevance learning with one prototype per class on z-scored features.
/// Prototypes move per sample (stochastic order from the seed); relevances
/// take one exponentiated-gradient step per epoch from the epoch-averaged
/// gradient, then are renormalised to sum 1. The returned vector is rescaled
/// so its largest entry is 1.
inline RelevanceResult train_grlvq_relevance(const LabeledFingerprintSet& set, const RelevanceOptions& opt = {}) {
  set.validate();
  const Eigen::MatrixXd Z = detail::standardize_columns(set.F);
  const auto n = static_cast<Eigen::Index>(set.rows());
  const Eigen::Index d = Z.cols();

  Eigen::VectorXd lambda = Eigen::VectorXd::Constant(d, 1.0 / static_cast<double>(d));
  Eigen::VectorXd proto_pos = Eigen::VectorXd::Zero(d), proto_neg = Eigen::VectorXd::Zero(d);
  {
    std::size_t np = 0, nn = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (set.y[static_cast<std::size_t>(i)] > 0)
        proto_pos += Z.row(i).transpose(), ++np;
      else
        proto_neg += Z.row(i).transpose(), ++nn;
    }
    proto_pos /= static_cast<double>(np);
    proto_neg /= static_cast<double>(nn);
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::mt19937_64 rng(opt.seed);

  RelevanceResult result;
  double previous_cost = std::numeric_limits<double>::infinity();
  for (std::size_t epoch = 0; epoch < opt.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(d);
    double cost = 0.0;
    for (Eigen::Index i : order) {
      const bool positive = set.y[static_cast<std::size_t>(i)] > 0;
      Eigen::VectorXd& own = positive ? proto_pos : proto_neg;
      Eigen::VectorXd& other = positive ? proto_neg : proto_pos;
      const Eigen::VectorXd diff_own = Z.row(i).transpose() - own;
      const Eigen::VectorXd diff_other = Z.row(i).transpose() - other;
      const Eigen::VectorXd sq_own = diff_own.array().square();
      const Eigen::VectorXd sq_other = diff_other.array().square();
      const double d_own = lambda.dot(sq_own);
      const double d_other = lambda.dot(sq_other);
      const double denom = d_own + d_other;
      if (!(denom > 0.0)) continue;
      cost += (d_own - d_other) / denom;
      const double xi_own = 2.0 * d_other / (denom * denom);
      const double xi_other = 2.0 * d_own / (denom * denom);
      own += opt.prototype_rate * xi_own * 2.0 * lambda.cwiseProduct(diff_own);
      other -= opt.prototype_rate * xi_other * 2.0 * lambda.cwiseProduct(diff_other);
      grad += xi_own * sq_own - xi_other * sq_other;
    }
    grad /= static_cast<double>(n);
    cost /= static_cast<double>(n);
    result.cost_trace.push_back(cost);

    lambda = (lambda.array() * (-opt.relevance_rate * grad.array()).exp()).matrix();
    const double sum = lambda.sum();
    if (!(sum > 0.0) || !std::isfinite(sum)) {
      lambda.setConstant(1.0 / static_cast<double>(d));
      break;
    }
    lambda /= sum;
    if (std::abs(previous_cost - cost) < 1e-9) {
      result.converged = true;
      break;
    }
    previous_cost = cost;
  }
  if (!result.converged && result.cost_trace.size() >= 2) {
    const double a = result.cost_trace[result.cost_trace.size() - 2];
    const double b = result.cost_trace.back();
    result.converged = std::abs(a - b) < 1e-3;
  }

  const double peak = lambda.maxCoeff();
  result.relevance.resize(static_cast<std::size_t>(d));
  for (Eigen::Index r = 0; r < d; ++r) result.relevance[static_cast<std::size_t>(r)] = lambda(r) / peak;
  return result;
}

/// Plain-text relevance vector: whitespace separated floats.
inline std::vector<double> read_relevance_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) fail(ErrorCode::IoError, "cannot open " + path.string());
  std::vector<double> out;
  double v = 0.0;
  while (is >> v) out.push_back(v);
  if (!is.eof()) fail(ErrorCode::FormatError, path.string() + ": non-numeric token");
  return out;
}

// ---------------------------------------------------------------------------
// LDA

/// Fisher direction w = (S_w + eps I)^-1 (mu1 - mu2) with eps = 1e-6 trace(S_w) / N_f.
inline ProjectionBasis project_lda(const LabeledFingerprintSet& set) {
  set.validate();
  const Eigen::VectorXd mu1 = set.class_mean(1);
  const Eigen::VectorXd mu2 = set.class_mean(-1);
  const Eigen::Index d = set.F.cols();

  Eigen::MatrixXd Sw = Eigen::MatrixXd::Zero(d, d);
  for (std::size_t i = 0; i < set.rows(); ++i) {
    const Eigen::VectorXd c = set.F.row(static_cast<Eigen::Index>(i)).transpose() - (set.y[i] > 0 ? mu1 : mu2);
    Sw.selfadjointView<Eigen::Lower>().rankUpdate(c);
  }
  Sw = Sw.selfadjointView<Eigen::Lower>();
  const double eps = 1e-6 * Sw.trace() / static_cast<double>(d);
  Sw.diagonal().array() += eps;

  Eigen::LLT<Eigen::MatrixXd> llt(Sw);
  if (llt.info() != Eigen::Success || !(eps > 0.0 || Sw.diagonal().minCoeff() > 0.0))
    fail(ErrorCode::SingularScatter, "within-class scatter is singular after ridge");

  ProjectionBasis basis;
  basis.method = Method::LDA;
  basis.basis = llt.solve(mu1 - mu2);
  if (!basis.basis.allFinite()) fail(ErrorCode::SingularScatter, "within-class scatter solve is non-finite");
  basis.mean = set.F.colwise().mean().transpose();
  return basis;
}

// ---------------------------------------------------------------------------
// PCA

/// Leading eigenvectors of the (1/N) covariance of column-centred data. Each
/// eigenvector's largest-magnitude entry is made positive.
inline ProjectionBasis project_pca(const LabeledFingerprintSet& set, std::size_t n_components) {
  set.validate();
  const auto d = static_cast<std::size_t>(set.F.cols());
  if (n_components < 1 || n_components > d) fail(ErrorCode::InvalidCount, "PCA component count out of range");

  const Eigen::VectorXd mean = set.F.colwise().mean().transpose();
  const Eigen::MatrixXd centred = set.F.rowwise() - mean.transpose();
  const Eigen::MatrixXd cov = (centred.transpose() * centred) / static_cast<double>(set.rows());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) fail(ErrorCode::NumericalFailure, "covariance eigen-decomposition failed");

  ProjectionBasis basis;
  basis.method = Method::PCA;
  basis.mean = mean;
  basis.basis.resize(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(n_components));
  basis.eigenvalues.resize(static_cast<Eigen::Index>(n_components));
  for (std::size_t c = 0; c < n_components; ++c) {
    // Eigen returns ascending eigenvalues.
    const auto src = static_cast<Eigen::Index>(d - 1 - c);
    Eigen::VectorXd v = eig.eigenvectors().col(src);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0.0) v = -v;
    basis.basis.col(static_cast<Eigen::Index>(c)) = v;
    basis.eigenvalues(static_cast<Eigen::Index>(c)) = eig.eigenvalues()(src);
  }
  return basis;
}

// ---------------------------------------------------------------------------
// NCA

struct NcaOptions {
  double regularizer = -1.0;  // lambda_R; negative selects 1 / N_tau
  double kernel_width = 1.0;  // psi
  std::size_t iterations = 200;
  double initial_step = 1.0;
};

struct NcaResult {
  FeatureRanking ranking;
  std::vector<double> weights;
  std::vector<double> objective_trace;  // objective before the first step, then after every iteration
};

namespace detail {

/// Leave-one-out misclassification objective plus ridge on the weights, with
/// optional gradient. Distances are sum_r w_r^2 |f_ir - f_jr|, kernel exp(-d/psi).
inline double nca_objective(const Eigen::MatrixXd& Z, const std::vector<int>& y, const Eigen::VectorXd& w,
                            double lambda_r, double psi, Eigen::VectorXd* grad) {
  const Eigen::Index n = Z.rows();
  const Eigen::Index d = Z.cols();
  const Eigen::VectorXd w2 = w.array().square();
  Eigen::VectorXd g = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd dist(n), p(n);
  Eigen::MatrixXd absdiff(n, d);
  double loss = 0.0;

  for (Eigen::Index i = 0; i < n; ++i) {
    absdiff = (Z.rowwise() - Z.row(i)).cwiseAbs();
    dist = absdiff * w2;
    double dmin = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i) dmin = std::min(dmin, dist(j));
    double norm = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      p(j) = (j == i) ? 0.0 : std::exp(-(dist(j) - dmin) / psi);
      norm += p(j);
    }
    p /= norm;
    double err_i = 0.0;
    for (Eigen::Index j = 0; j < n; ++j)
      if (y[static_cast<std::size_t>(j)] != y[static_cast<std::size_t>(i)]) err_i += p(j);
    loss += err_i;
    if (grad) {
      Eigen::VectorXd coeff(n);
      for (Eigen::Index j = 0; j < n; ++j) {
        const double l = (y[static_cast<std::size_t>(j)] != y[static_cast<std::size_t>(i)]) ? 1.0 : 0.0;
        coeff(j) = p(j) * (err_i - l);
      }
      g += absdiff.transpose() * coeff;
    }
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  if (grad) *grad = (2.0 / psi) * inv_n * g.cwiseProduct(w) + 2.0 * lambda_r * w;
  return loss * inv_n + lambda_r * w2.sum();
}

}  // namespace detail

/// Minimises the regularised NCA objective on z-scored features by gradient
/// descent with a backtracking (Armijo) line search, so the objective never
/// increases. Features are ranked by w_r^2, largest first.
inline NcaResult fit_nca(const LabeledFingerprintSet& set, const NcaOptions& opt = {}) {
  set.validate();
  if (!(opt.kernel_width > 0.0)) fail(ErrorCode::InvalidParams, "kernel width must be positive");
  const double lambda_r = opt.regularizer < 0.0 ? 1.0 / static_cast<double>(set.rows()) : opt.regularizer;
  const Eigen::MatrixXd Z = detail::standardize_columns(set.F);

  Eigen::VectorXd w = Eigen::VectorXd::Ones(Z.cols());
  Eigen::VectorXd grad;
  double obj = detail::nca_objective(Z, set.y, w, lambda_r, opt.kernel_width, &grad);
  if (!std::isfinite(obj)) fail(ErrorCode::NumericalFailure, "NCA objective is not finite");

  NcaResult result;
  result.objective_trace.push_back(obj);
  double step = opt.initial_step;
  for (std::size_t it = 0; it < opt.iterations; ++it) {
    const double gnorm2 = grad.squaredNorm();
    if (!(gnorm2 > 0.0)) break;
    bool accepted = false;
    for (int tries = 0; tries < 60; ++tries) {
      const Eigen::VectorXd candidate = w - step * grad;
      Eigen::VectorXd cand_grad;
      const double cand = detail::nca_objective(Z, set.y, candidate, lambda_r, opt.kernel_width, &cand_grad);
      if (!std::isfinite(cand)) fail(ErrorCode::NumericalFailure, "NCA objective is not finite");
      if (cand <= obj - 1e-4 * step * gnorm2) {
        w = candidate;
        obj = cand;
        grad = cand_grad;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    result.objective_trace.push_back(obj);
    if (!accepted) break;
    step = std::min(2.0 * step, opt.initial_step);
  }

  result.weights.assign(w.data(), w.data() + w.size());
  FeatureRanking& r = result.ranking;
  r.method = Method::NCA;
  r.scores.resize(result.weights.size());
  for (std::size_t k = 0; k < r.scores.size(); ++k) r.scores[k] = result.weights[k] * result.weights[k];
  r.order = detail::order_by(r.scores, true);
  r.direction = ScoreOrder::Descending;
  return result;
}

inline FeatureRanking rank_nca(const LabeledFingerprintSet& set, const NcaOptions& opt = {}) {
  return fit_nca(set, opt).ranking;
}

// ---------------------------------------------------------------------------
// POEACC

/// Histogram estimate of the equal-prior Bayes error for one feature:
/// 0.5 * sum_b min(P1(b), P2(b)) over shared bins.
inline double probability_of_error(std::span<const double> a, std::span<const double> b, std::size_t bins) {
  const SharedBins sb = pooled_bins(a, b, bins);
  const auto p = histogram_pmf(a, sb);
  const auto q = histogram_pmf(b, sb);
  double e = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) e += std::min(p[k], q[k]);
  return 0.5 * e;
}

struct PoeaccOptions {
  double w_rho = 0.5;
  double w_alpha = 0.5;
  std::size_t bins = 0;  // 0 selects ceil(sqrt(N_tau))
};

/// Greedy sequential ranking: first the smallest normalised POE, then at each
/// step the feature minimising w_rho * POE + w_alpha * ACC, where ACC is the
/// mean |correlation| with the features already chosen, min-max normalised
/// across the remaining candidates.
inline FeatureRanking rank_poeacc(const LabeledFingerprintSet& set, const PoeaccOptions& opt = {}) {
  set.validate();
  if (!(opt.w_rho > 0.0 && opt.w_rho < 1.0 && opt.w_alpha > 0.0 && opt.w_alpha < 1.0) ||
      std::abs(opt.w_rho + opt.w_alpha - 1.0) > 1e-12)
    fail(ErrorCode::InvalidParams, "POEACC weights must lie in (0, 1) and sum to 1");
  const std::size_t d = set.features();
  const std::size_t bins = opt.bins ? opt.bins : sqrt_rule_bins(set.rows());

  FeatureRanking r;
  r.method = Method::POEACC;
  r.direction = ScoreOrder::Greedy;

  std::vector<double> poe(d);
  for (std::size_t k = 0; k < d; ++k) poe[k] = probability_of_error(set.column(k, 1), set.column(k, -1), bins);
  const auto [lo_it, hi_it] = std::minmax_element(poe.begin(), poe.end());
  const double lo = *lo_it, hi = *hi_it;
  std::vector<double> poe_norm(d, 0.0);
  if (hi > lo)
    for (std::size_t k = 0; k < d; ++k) poe_norm[k] = (poe[k] - lo) / (hi - lo);

  // |Pearson correlation|; zero-variance features correlate with nothing.
  const Eigen::MatrixXd centred = set.F.rowwise() - set.F.colwise().mean();
  const Eigen::VectorXd sd = centred.colwise().norm().transpose();
  Eigen::MatrixXd corr = centred.transpose() * centred;
  for (std::size_t a = 0; a < d; ++a) {
    if (!(sd(static_cast<Eigen::Index>(a)) > 0.0)) r.flagged.push_back(a);
    for (std::size_t b = 0; b < d; ++b) {
      const double s = sd(static_cast<Eigen::Index>(a)) * sd(static_cast<Eigen::Index>(b));
      auto& c = corr(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
      c = s > 0.0 ? std::min(1.0, std::abs(c) / s) : 0.0;
    }
  }

  r.scores.assign(d, 0.0);
  std::vector<bool> taken(d, false);
  std::vector<double> corr_sum(d, 0.0);
  for (std::size_t step = 0; step < d; ++step) {
    std::size_t best = d;
    double best_cost = std::numeric_limits<double>::infinity();
    if (step == 0) {
      for (std::size_t k = 0; k < d; ++k)
        if (poe_norm[k] < best_cost) best_cost = poe_norm[k], best = k;
      best_cost *= opt.w_rho;
    } else {
      double amin = std::numeric_limits<double>::infinity(), amax = -amin;
      for (std::size_t k = 0; k < d; ++k)
        if (!taken[k]) {
          const double a = corr_sum[k] / static_cast<double>(step);
          amin = std::min(amin, a);
          amax = std::max(amax, a);
        }
      for (std::size_t k = 0; k < d; ++k) {
        if (taken[k]) continue;
        const double a = corr_sum[k] / static_cast<double>(step);
        const double a_norm = amax > amin ? (a - amin) / (amax - amin) : 0.0;
        const double cost = opt.w_rho * poe_norm[k] + opt.w_alpha * a_norm;
        if (cost < best_cost) best_cost = cost, best = k;
      }
    }
    taken[best] = true;
    r.order.push_back(best);
    r.scores[best] = best_cost;
    for (std::size_t k = 0; k < d; ++k)
      corr_sum[k] += corr(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(best));
  }
  return r;
}

// ---------------------------------------------------------------------------
// Bhattacharyya coefficient

/// BC between the class-conditional histograms of one feature.
inline double feature_bhattacharyya(std::span<const double> a, std::span<const double> b, std::size_t bins) {
  const SharedBins sb = pooled_bins(a, b, bins);
  return bhattacharyya(histogram_pmf(a, sb), histogram_pmf(b, sb));
}

/// Smallest overlap first. `bins` = 0 selects ceil(sqrt(N_tau)).
inline FeatureRanking rank_bc(const LabeledFingerprintSet& set, std::size_t bins = 0) {
  set.validate();
  if (bins == 0) bins = sqrt_rule_bins(set.rows());
  if (bins < 2) fail(ErrorCode::InvalidParams, "at least two bins are required");
  FeatureRanking r;
  r.method = Method::BC;
  r.direction = ScoreOrder::Ascending;
  r.scores.resize(set.features());
  for (std::size_t k = 0; k < set.features(); ++k)
    r.scores[k] = feature_bhattacharyya(set.column(k, 1), set.column(k, -1), bins);
  r.order = detail::order_by(r.scores, false);
  return r;
}

// ---------------------------------------------------------------------------
// Welch t-test

struct WelchResult {
  double t = 0.0;
  double dof = 0.0;
  double p = 1.0;  // two-sided
  bool degenerate = false;  // both variances zero and equal means
};

inline WelchResult welch_ttest(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) fail(ErrorCode::InvalidInput, "each class needs at least two samples");
  const double n1 = static_cast<double>(a.size());
  const double n2 = static_cast<double>(b.size());
  // Exactly constant samples get zero variance and their value as the mean,
  // so rounding in the mean cannot fake a difference.
  auto constant = [](std::span<const double> x) {
    return std::all_of(x.begin(), x.end(), [&](double v) { return v == x.front(); });
  };
  const bool ca = constant(a), cb = constant(b);
  const double m1 = ca ? a.front() : mean_of(a), m2 = cb ? b.front() : mean_of(b);
  const double v1 = ca ? 0.0 : sample_variance(a), v2 = cb ? 0.0 : sample_variance(b);
  const double se2 = v1 / n1 + v2 / n2;

  WelchResult w;
  if (!(se2 > 0.0)) {
    if (m1 == m2) {
      w.degenerate = true;
      w.t = 0.0;
      w.p = 1.0;
      w.dof = n1 + n2 - 2.0;
      return w;
    }
    w.t = m1 > m2 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
    w.dof = n1 + n2 - 2.0;
    w.p = 0.0;
    return w;
  }
  w.t = (m1 - m2) / std::sqrt(se2);
  w.dof = se2 * se2 / (v1 * v1 / ((n1 - 1.0) * n1 * n1) + v2 * v2 / ((n2 - 1.0) * n2 * n2));
  const boost::math::students_t dist(w.dof);
  w.p = std::clamp(2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(w.t))), 0.0, 1.0);
  return w;
}

/// Keeps features whose two-sided p-value is below alpha, smallest p first.
/// Scores hold every feature's p-value.
inline FeatureRanking rank_ttest(const LabeledFingerprintSet& set, double alpha = 0.05) {
  set.validate();
  FeatureRanking r;
  r.method = Method::TTest;
  r.direction = ScoreOrder::Ascending;
  r.scores.resize(set.features());
  std::vector<std::size_t> kept;
  for (std::size_t k = 0; k < set.features(); ++k) {
    const WelchResult w = welch_ttest(set.column(k, 1), set.column(k, -1));
    r.scores[k] = w.p;
    if (w.degenerate) {
      r.flagged.push_back(k);
      continue;
    }
    if (w.p < alpha) kept.push_back(k);
  }
  std::stable_sort(kept.begin(), kept.end(), [&](std::size_t a, std::size_t b) { return r.scores[a] < r.scores[b]; });
  r.order = std::move(kept);
  return r;
}

// ---------------------------------------------------------------------------
// Relief-F

struct ReliefOptions {
  std::size_t neighbors = 10;  // N_K
};

/// Deterministic Relief-F: every fingerprint is used once as the reference.
/// Per-feature differences are normalised by the feature's range over the
/// set; neighbours are found by Euclidean distance over those normalised
/// differences (ties broken by row index).
inline FeatureRanking rank_relieff(const LabeledFingerprintSet& set, const ReliefOptions& opt = {}) {
  set.validate();
  const std::size_t k_nn = opt.neighbors;
  if (k_nn == 0) fail(ErrorCode::InvalidNeighborCount, "neighbour count must be positive");
  const std::size_t n_pos = set.count(1), n_neg = set.count(-1);
  if (n_pos < k_nn + 1 || n_neg < k_nn + 1)
    fail(ErrorCode::InvalidNeighborCount, "each class needs at least N_K + 1 members");

  const auto n = static_cast<Eigen::Index>(set.rows());
  const Eigen::Index d = set.F.cols();
  const Eigen::RowVectorXd lo = set.F.colwise().minCoeff();
  const Eigen::RowVectorXd range = set.F.colwise().maxCoeff() - lo;
  Eigen::RowVectorXd inv_range(d);
  for (Eigen::Index c = 0; c < d; ++c) inv_range(c) = range(c) > 0.0 ? 1.0 / range(c) : 0.0;
  const Eigen::MatrixXd Z = (set.F.rowwise() - lo).array().rowwise() * inv_range.array();
  const Eigen::VectorXd sq = Z.rowwise().squaredNorm();

  const double prior_pos = static_cast<double>(n_pos) / static_cast<double>(n);
  const double prior_neg = 1.0 - prior_pos;
  const double norm = static_cast<double>(n) * static_cast<double>(k_nn);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(d);

  const std::size_t shortlist = k_nn + 8;
  constexpr Eigen::Index block = 256;
  std::vector<std::pair<double, Eigen::Index>> hits, misses;
  for (Eigen::Index b0 = 0; b0 < n; b0 += block) {
    const Eigen::Index bn = std::min(block, n - b0);
    const Eigen::MatrixXd gram = Z.middleRows(b0, bn) * Z.transpose();
    for (Eigen::Index bi = 0; bi < bn; ++bi) {
      const Eigen::Index i = b0 + bi;
      const int yi = set.y[static_cast<std::size_t>(i)];
      hits.clear();
      misses.clear();
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j == i) continue;
        const double approx = sq(i) + sq(j) - 2.0 * gram(bi, j);
        (set.y[static_cast<std::size_t>(j)] == yi ? hits : misses).emplace_back(approx, j);
      }
      // Shortlist on the fast estimate, then order the shortlist exactly.
      auto nearest = [&](std::vector<std::pair<double, Eigen::Index>>& cand) {
        const std::size_t keep = std::min(shortlist, cand.size());
        std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(keep), cand.end());
        cand.resize(keep);
        for (auto& c : cand) c.first = (Z.row(i) - Z.row(c.second)).squaredNorm();
        std::sort(cand.begin(), cand.end());
        cand.resize(k_nn);
      };
      nearest(hits);
      nearest(misses);
      const double miss_weight = (yi > 0 ? prior_neg : prior_pos) / (1.0 - (yi > 0 ? prior_pos : prior_neg));
      for (const auto& h : hits) w -= (Z.row(i) - Z.row(h.second)).cwiseAbs().transpose() / norm;
      for (const auto& m : misses) w += miss_weight * (Z.row(i) - Z.row(m.second)).cwiseAbs().transpose() / norm;
    }
  }

  FeatureRanking r;
  r.method = Method::ReliefF;
  r.direction = ScoreOrder::Descending;
  r.scores.assign(w.data(), w.data() + w.size());
  r.order = detail::order_by(r.scores, true);
  for (Eigen::Index c = 0; c < d; ++c)
    if (!(range(c) > 0.0)) r.flagged.push_back(static_cast<std::size_t>(c));
  return r;
}

// ---------------------------------------------------------------------------

/// First n entries of the ranking.
inline std::vector<std::size_t> select_top(const FeatureRanking& ranking, std::size_t n) {
  if (n == 0 || n > ranking.order.size())
    fail(ErrorCode::InvalidCount, "cannot select " + std::to_string(n) + " of " +
                                      std::to_string(ranking.order.size()) + " ranked features");
  return {ranking.order.begin(), ranking.order.begin() + static_cast<std::ptrdiff_t>(n)};
}

/// CSV: feature_index, score, rank, method. Unranked features get rank -1.
inline void write_ranking_csv(std::ostream& os, const FeatureRanking& r) {
  std::vector<long> rank(r.scores.size(), -1);
  for (std::size_t k = 0; k < r.order.size(); ++k) rank[r.order[k]] = static_cast<long>(k + 1);
  os << "feature_index,score,rank,method\n";
  os.precision(17);
  for (std::size_t k = 0; k < r.scores.size(); ++k)
    os << k << ',' << r.scores[k] << ',' << rank[k] << ',' << method_name(r.method) << '\n';
}

}  // namespace rfdna
