#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rfdna/errors.hpp"
#include "rfdna/feature_map.hpp"
#include "rfdna/iq_io.hpp"

namespace rfdna {

/// Per-feature affine standardisation fitted on training rows only.
struct Scaler {
  Eigen::VectorXd mean;
  Eigen::VectorXd spread;  // population std; 1 where the feature is constant

  static Scaler fit(const Eigen::MatrixXd& X) {
    if (X.rows() == 0) fail(ErrorCode::InvalidInput, "cannot fit a scaler on zero rows");
    Scaler s;
    s.mean = X.colwise().mean().transpose();
    s.spread = ((X.rowwise() - s.mean.transpose()).array().square().colwise().sum() / static_cast<double>(X.rows()))
                   .sqrt()
                   .transpose();
    for (Eigen::Index c = 0; c < s.spread.size(); ++c)
      if (!(s.spread(c) > 0.0)) s.spread(c) = 1.0;
    return s;
  }

  std::size_t dim() const noexcept { return static_cast<std::size_t>(mean.size()); }

  Scaler head(std::size_t n) const {
    return {mean.head(static_cast<Eigen::Index>(n)), spread.head(static_cast<Eigen::Index>(n))};
  }

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const { return (x - mean).cwiseQuotient(spread); }

  Eigen::MatrixXd apply_rows(const Eigen::MatrixXd& X) const {
    return ((X.rowwise() - mean.transpose()).array().rowwise() / spread.transpose().array()).matrix();
  }
};

inline Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  const Eigen::VectorXd a2 = A.rowwise().squaredNorm();
  const Eigen::VectorXd b2 = B.rowwise().squaredNorm();
  Eigen::MatrixXd D = -2.0 * (A * B.transpose());
  D.colwise() += a2;
  D.rowwise() += b2.transpose();
  return D.cwiseMax(0.0);
}

inline Eigen::MatrixXd rbf_kernel(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, double zeta) {
  return (-zeta * squared_distances(A, B).array()).exp().matrix();
}

// ---------------------------------------------------------------------------
// Dual solver

struct SmoOptions {
  double C = 1.0;
  double tolerance = 1e-3;
  std::size_t max_updates = 1'000'000;
};

struct SmoResult {
  Eigen::VectorXd alpha;
  double rho = 0.0;        // decision = sum alpha_i y_i K(x_i, x) - rho
  double objective = 0.0;  // dual objective sum(alpha) - 1/2 alpha' Q alpha (maximised)
  std::size_t updates = 0;
  double final_gap = 0.0;
  bool converged = false;
};

/// Pairwise working-set ascent on the soft-margin dual with a precomputed
/// kernel. Working pairs use maximal violation for the first index and the
/// second-order gain for the second.
inline SmoResult solve_smo(const Eigen::MatrixXd& K, std::span<const int> y, const SmoOptions& opt = {}) {
  const auto n = static_cast<Eigen::Index>(y.size());
  if (K.rows() != n || K.cols() != n) fail(ErrorCode::InvalidShape, "kernel matrix does not match label count");
  if (!(opt.C > 0.0)) fail(ErrorCode::InvalidParams, "C must be positive");
  bool has_pos = false, has_neg = false;
  for (int v : y) {
    if (v == 1) has_pos = true;
    else if (v == -1) has_neg = true;
    else fail(ErrorCode::InvalidInput, "labels must be +1 or -1");
  }
  if (!has_pos || !has_neg) fail(ErrorCode::InvalidInput, "both classes must be present");

  const double C = opt.C;
  constexpr double tau = 1e-12;
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd G = Eigen::VectorXd::Constant(n, -1.0);  // gradient of 1/2 a'Qa - e'a
  auto yy = [&](Eigen::Index t) { return static_cast<double>(y[static_cast<std::size_t>(t)]); };
  auto at_upper = [&](Eigen::Index t) { return alpha(t) >= C; };
  auto at_lower = [&](Eigen::Index t) { return alpha(t) <= 0.0; };

  SmoResult res;
  for (;;) {
    double gmax = -std::numeric_limits<double>::infinity();
    Eigen::Index i = -1;
    for (Eigen::Index t = 0; t < n; ++t) {
      if (yy(t) > 0) {
        if (!at_upper(t) && -G(t) >= gmax) gmax = -G(t), i = t;
      } else {
        if (!at_lower(t) && G(t) >= gmax) gmax = G(t), i = t;
      }
    }
    double gmax2 = -std::numeric_limits<double>::infinity();
    Eigen::Index j = -1;
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index t = 0; t < n && i >= 0; ++t) {
      double grad_diff = 0.0;
      if (yy(t) > 0) {
        if (at_lower(t)) continue;
        gmax2 = std::max(gmax2, G(t));
        grad_diff = gmax + G(t);
      } else {
        if (at_upper(t)) continue;
        gmax2 = std::max(gmax2, -G(t));
        grad_diff = gmax - G(t);
      }
      if (grad_diff > 0.0) {
        double quad = K(i, i) + K(t, t) - 2.0 * K(i, t);
        if (quad <= 0.0) quad = tau;
        const double gain = -(grad_diff * grad_diff) / quad;
        if (gain <= best) best = gain, j = t;
      }
    }
    res.final_gap = gmax + gmax2;
    if (i < 0 || j < 0 || gmax + gmax2 < opt.tolerance) {
      res.converged = true;
      break;
    }
    if (res.updates >= opt.max_updates) break;
    ++res.updates;

    const double yi = yy(i), yj = yy(j);
    const double old_i = alpha(i), old_j = alpha(j);
    double quad = K(i, i) + K(j, j) - 2.0 * K(i, j);
    if (quad <= 0.0) quad = tau;
    double ai = old_i, aj = old_j;
    if (yi != yj) {
      const double delta = (-G(i) - G(j)) / quad;
      const double diff = ai - aj;
      ai += delta;
      aj += delta;
      if (diff > 0.0) {
        if (aj < 0.0) aj = 0.0, ai = diff;
      } else if (ai < 0.0) {
        ai = 0.0, aj = -diff;
      }
      if (diff > 0.0) {
        if (ai > C) ai = C, aj = C - diff;
      } else if (aj > C) {
        aj = C, ai = C + diff;
      }
    } else {
      const double delta = (G(i) - G(j)) / quad;
      const double sum = ai + aj;
      ai -= delta;
      aj += delta;
      if (sum > C) {
        if (ai > C) ai = C, aj = sum - C;
      } else if (aj < 0.0) {
        aj = 0.0, ai = sum;
      }
      if (sum > C) {
        if (aj > C) aj = C, ai = sum - C;
      } else if (ai < 0.0) {
        ai = 0.0, aj = sum;
      }
    }
    alpha(i) = ai;
    alpha(j) = aj;
    const double di = (ai - old_i) * yi, dj = (aj - old_j) * yj;
    for (Eigen::Index t = 0; t < n; ++t) G(t) += yy(t) * (K(t, i) * di + K(t, j) * dj);
  }

  // Bias from free vectors, otherwise the midpoint of the feasible interval.
  double ub = std::numeric_limits<double>::infinity(), lb = -ub, sum_free = 0.0;
  std::size_t n_free = 0;
  for (Eigen::Index t = 0; t < n; ++t) {
    const double yg = yy(t) * G(t);
    if (at_upper(t)) {
      if (yy(t) < 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else if (at_lower(t)) {
      if (yy(t) > 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  res.rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : 0.5 * (ub + lb);
  // With G = Qa - e:  1/2 a'Qa - e'a = 1/2 a'(G - e), so the maximised dual is its negative.
  res.objective = -0.5 * alpha.dot(G - Eigen::VectorXd::Ones(n));
  res.alpha = std::move(alpha);
  return res;
}

// ---------------------------------------------------------------------------
// Model

struct SvmModel {
  FeatureMap features;
  Scaler scaler;
  double zeta = 1.0;
  double cost_C = 1.0;
  double bias = 0.0;                // beta_0
  Eigen::MatrixXd support_vectors;  // scaled retained features, one row per vector
  Eigen::VectorXd dual_coeffs;      // alpha_j y_j

  // Solver diagnostics, informational only.
  std::size_t solver_updates = 0;
  bool converged = true;

  std::size_t dim() const noexcept { return static_cast<std::size_t>(support_vectors.cols()); }
  std::size_t support_count() const noexcept { return static_cast<std::size_t>(support_vectors.rows()); }
};

struct SvmOptions {
  double C = 1.0;
  double zeta = 0.0;  // <= 0 selects 1 / N_r
  double tolerance = 1e-3;
  std::size_t max_updates = 1'000'000;
};

/// Keeps only rows with alpha > 0 and records alpha * y and the bias.
inline SvmModel assemble_model(const SmoResult& r, const Eigen::MatrixXd& Z, std::span<const int> y, FeatureMap map,
                               Scaler scaler, double zeta, double C) {
  if (!r.converged)
    fail(ErrorCode::TrainingFailed, "dual solver stopped after " + std::to_string(r.updates) +
                                        " pair updates with KKT gap " + std::to_string(r.final_gap));
  std::vector<Eigen::Index> keep;
  for (Eigen::Index t = 0; t < r.alpha.size(); ++t)
    if (r.alpha(t) > 0.0) keep.push_back(t);
  SvmModel m;
  m.features = std::move(map);
  m.scaler = std::move(scaler);
  m.zeta = zeta;
  m.cost_C = C;
  m.bias = -r.rho;
  m.support_vectors.resize(static_cast<Eigen::Index>(keep.size()), Z.cols());
  m.dual_coeffs.resize(static_cast<Eigen::Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) {
    const auto t = keep[k];
    m.support_vectors.row(static_cast<Eigen::Index>(k)) = Z.row(t);
    m.dual_coeffs(static_cast<Eigen::Index>(k)) = r.alpha(t) * static_cast<double>(y[static_cast<std::size_t>(t)]);
  }
  m.solver_updates = r.updates;
  m.converged = r.converged;
  return m;
}

/// Trains on rows that already hold the retained features (N_r columns).
/// The scaler is fitted on these rows; `map` records how full fingerprints
/// reach this space (identity selection by default).
inline SvmModel train_svm(const Eigen::MatrixXd& X, std::span<const int> y, const SvmOptions& opt = {},
                          FeatureMap map = {}) {
  if (static_cast<std::size_t>(X.rows()) != y.size()) fail(ErrorCode::InvalidShape, "row/label count mismatch");
  if (X.cols() == 0) fail(ErrorCode::InvalidShape, "no features");
  if (map.input_dim == 0) {
    std::vector<std::size_t> idx(static_cast<std::size_t>(X.cols()));
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    map = FeatureMap::select(std::move(idx), static_cast<std::size_t>(X.cols()));
  }
  if (map.output_dim() != static_cast<std::size_t>(X.cols()))
    fail(ErrorCode::InvalidShape, "feature map output does not match training width");
  const double zeta = opt.zeta > 0.0 ? opt.zeta : 1.0 / static_cast<double>(X.cols());
  Scaler scaler = Scaler::fit(X);
  const Eigen::MatrixXd Z = scaler.apply_rows(X);
  const Eigen::MatrixXd K = rbf_kernel(Z, Z, zeta);
  const SmoResult r = solve_smo(K, y, {opt.C, opt.tolerance, opt.max_updates});
  return assemble_model(r, Z, y, std::move(map), std::move(scaler), zeta, opt.C);
}

inline SvmModel train_svm(const LabeledFingerprintSet& set, const SvmOptions& opt = {}, FeatureMap map = {}) {
  set.validate();
  return train_svm(set.F, set.y, opt, std::move(map));
}

/// f(x) = sum_j alpha_j y_j G(beta_j, x) + beta_0 for one retained-feature vector.
inline double svm_score(const SvmModel& m, std::span<const double> retained) {
  if (retained.size() != m.dim())
    fail(ErrorCode::InvalidShape, "input has " + std::to_string(retained.size()) + " features, model expects " +
                                      std::to_string(m.dim()));
  const Eigen::Map<const Eigen::VectorXd> x(retained.data(), static_cast<Eigen::Index>(retained.size()));
  const Eigen::VectorXd z = m.scaler.apply(x);
  double f = m.bias;
  for (Eigen::Index j = 0; j < m.support_vectors.rows(); ++j)
    f += m.dual_coeffs(j) * std::exp(-m.zeta * (m.support_vectors.row(j).transpose() - z).squaredNorm());
  return f;
}

/// Score for a full fingerprint: applies the model's feature map first.
inline double score_fingerprint(const SvmModel& m, std::span<const double> full) {
  const Eigen::VectorXd r = m.features.apply(full);
  return svm_score(m, std::span<const double>(r.data(), static_cast<std::size_t>(r.size())));
}

/// Batched scores for full fingerprints, one per row.
inline Eigen::VectorXd score_rows(const SvmModel& m, const Eigen::MatrixXd& full_rows) {
  const Eigen::MatrixXd Z = m.scaler.apply_rows(m.features.apply_rows(full_rows));
  return (rbf_kernel(Z, m.support_vectors, m.zeta) * m.dual_coeffs).array() + m.bias;
}

/// +1 accepts the claimed identity. A score of exactly zero rejects.
inline int decide_score(double f) noexcept { return f > 0.0 ? 1 : -1; }

inline int svm_decide(const SvmModel& m, std::span<const double> retained) { return decide_score(svm_score(m, retained)); }

inline double margin_of(double f, int y) {
  if (y != 1 && y != -1) fail(ErrorCode::InvalidInput, "label must be +1 or -1");
  return 2.0 * static_cast<double>(y) * f;
}

/// m = 2 y f
inline double margin(const SvmModel& m, std::span<const double> retained, int y) {
  return margin_of(svm_score(m, retained), y);
}

// ---------------------------------------------------------------------------
// JSON

namespace detail {

inline nlohmann::json vec_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

inline Eigen::VectorXd json_vec(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline nlohmann::json mat_json(const Eigen::MatrixXd& M) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < M.rows(); ++r) rows.push_back(vec_json(M.row(r).transpose()));
  return rows;
}

inline Eigen::MatrixXd json_mat(const nlohmann::json& j, Eigen::Index cols) {
  Eigen::MatrixXd M(static_cast<Eigen::Index>(j.size()), cols);
  for (std::size_t r = 0; r < j.size(); ++r) {
    const Eigen::VectorXd row = json_vec(j[r]);
    if (row.size() != cols) fail(ErrorCode::FormatError, "ragged matrix");
    M.row(static_cast<Eigen::Index>(r)) = row.transpose();
  }
  return M;
}

}  // namespace detail

inline nlohmann::json feature_map_to_json(const FeatureMap& f) {
  nlohmann::json j{{"input_dim", f.input_dim}};
  if (f.kind == FeatureMap::Kind::Indices) {
    j["kind"] = "indices";
    j["feature_indices"] = f.indices;
  } else {
    j["kind"] = "projection";
    j["mean"] = detail::vec_json(f.mean);
    j["basis"] = detail::mat_json(f.basis.transpose());  // one row per direction
  }
  return j;
}

inline FeatureMap feature_map_from_json(const nlohmann::json& j) {
  FeatureMap f;
  f.input_dim = j.at("input_dim").get<std::size_t>();
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "indices") {
    f = FeatureMap::select(j.at("feature_indices").get<std::vector<std::size_t>>(), f.input_dim);
  } else if (kind == "projection") {
    f.kind = FeatureMap::Kind::Projection;
    f.mean = detail::json_vec(j.at("mean"));
    f.basis = detail::json_mat(j.at("basis"), static_cast<Eigen::Index>(f.input_dim)).transpose();
  } else {
    fail(ErrorCode::FormatError, "unknown feature map kind '" + kind + "'");
  }
  return f;
}

inline nlohmann::json model_to_json(const SvmModel& m) {
  return {{"kernel", "rbf"},
          {"zeta", m.zeta},
          {"C", m.cost_C},
          {"bias", m.bias},
          {"features", feature_map_to_json(m.features)},
          {"scaler_mean", detail::vec_json(m.scaler.mean)},
          {"scaler_spread", detail::vec_json(m.scaler.spread)},
          {"support_vectors", detail::mat_json(m.support_vectors)},
          {"dual_coeffs", detail::vec_json(m.dual_coeffs)},
          {"solver_updates", m.solver_updates},
          {"converged", m.converged}};
}

inline SvmModel model_from_json(const nlohmann::json& j) {
  try {
    SvmModel m;
    if (j.value("kernel", std::string("rbf")) != "rbf") fail(ErrorCode::InvalidModel, "only the RBF kernel is supported");
    m.zeta = j.at("zeta").get<double>();
    m.cost_C = j.at("C").get<double>();
    m.bias = j.at("bias").get<double>();
    m.features = feature_map_from_json(j.at("features"));
    m.scaler.mean = detail::json_vec(j.at("scaler_mean"));
    m.scaler.spread = detail::json_vec(j.at("scaler_spread"));
    m.dual_coeffs = detail::json_vec(j.at("dual_coeffs"));
    m.support_vectors = detail::json_mat(j.at("support_vectors"), m.scaler.mean.size());
    m.solver_updates = j.value("solver_updates", std::size_t{0});
    m.converged = j.value("converged", true);
    if (m.support_vectors.rows() != m.dual_coeffs.size() ||
        m.features.output_dim() != static_cast<std::size_t>(m.scaler.mean.size()))
      fail(ErrorCode::InvalidModel, "inconsistent model dimensions");
    return m;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::FormatError, std::string("model: ") + e.what());
  }
}

inline void save_model(const std::filesystem::path& path, const SvmModel& m) { write_json_file(path, model_to_json(m)); }

inline SvmModel load_model(const std::filesystem::path& path) {
  try {
    return model_from_json(read_json_file(path));
  } catch (const Error& e) {
    fail(e.code(), path.string() + ": " + e.what());
  }
}

}  // namespace rfdna
