#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "rfdna/svm.hpp"

using namespace rfdna;

namespace {

struct Blobs {
  Eigen::MatrixXd X;
  std::vector<int> y;
};

Blobs blobs(std::size_t n, std::size_t d, double sep, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Blobs b;
  b.X.resize(static_cast<Eigen::Index>(2 * n), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < 2 * n; ++i) {
    const int y = i < n ? 1 : -1;
    b.y.push_back(y);
    for (std::size_t j = 0; j < d; ++j)
      b.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = g(rng) + (j == 0 ? 0.5 * sep * y : 0.0);
  }
  return b;
}

std::span<const double> row_span(const Eigen::VectorXd& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

Eigen::VectorXd row(const Eigen::MatrixXd& X, Eigen::Index i) { return X.row(i).transpose(); }

std::vector<double> to_vec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

// The stored model only keeps alpha*y; recover alpha and check dual feasibility.
void expect_dual_feasible(const SvmModel& m) {
  double sum = 0.0;
  for (Eigen::Index j = 0; j < m.dual_coeffs.size(); ++j) {
    const double a = std::abs(m.dual_coeffs(j));
    EXPECT_GT(a, 0.0);
    EXPECT_LE(a, m.cost_C);
    sum += m.dual_coeffs(j);
  }
  EXPECT_LE(std::abs(sum), 1e-6);
}

}  // namespace

TEST(Svm, SeparableClustersAreFitExactly) {
  const auto b = blobs(40, 2, 12.0, 1);
  const auto m = train_svm(b.X, b.y, {.C = 1e3, .tolerance = 1e-6});  // effectively hard margin
  expect_dual_feasible(m);
  double slack = 0.0;
  for (Eigen::Index i = 0; i < b.X.rows(); ++i) {
    const auto x = row(b.X, i);
    const int y = b.y[static_cast<std::size_t>(i)];
    EXPECT_EQ(svm_decide(m, row_span(x)), y);
    const double mg = margin(m, row_span(x), y);
    slack += std::max(0.0, 1.0 - mg / 2.0);
  }
  EXPECT_LT(slack, 1e-2);
}

TEST(Svm, FourPointDualMatchesGridSearch) {
  const std::vector<std::array<double, 2>> pts{{0.0, 0.0}, {1.0, 0.3}, {0.8, 1.1}, {2.0, 1.5}};
  const std::vector<int> y{1, 1, -1, -1};
  for (double zeta : {0.5, 2.0}) {
    for (double C : {1.0, 0.3}) {
      Eigen::MatrixXd K(4, 4);
      std::vector<std::vector<long double>> KL(4, std::vector<long double>(4));
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
          const double dx = pts[i][0] - pts[j][0], dy = pts[i][1] - pts[j][1];
          K(i, j) = std::exp(-zeta * (dx * dx + dy * dy));
          KL[i][j] = std::exp(-static_cast<long double>(zeta) * (dx * dx + dy * dy));
        }
      const auto r = solve_smo(K, y, {.C = C, .tolerance = 1e-8});
      ASSERT_TRUE(r.converged);
      const auto grid = oracle::dual_grid_max(KL, C);
      EXPECT_NEAR(r.objective, static_cast<double>(grid), 1e-4) << "zeta " << zeta << " C " << C;
      // The solver's own objective must agree with a direct evaluation.
      std::vector<long double> a(4);
      for (int i = 0; i < 4; ++i) a[i] = r.alpha(i);
      EXPECT_NEAR(r.objective, static_cast<double>(oracle::dual_objective(a, y, KL)), 1e-12);
    }
  }
}

TEST(Svm, LabelFlipNegatesDecisionFunction) {
  auto b = blobs(30, 3, 2.0, 2);
  const SvmOptions opt{.tolerance = 1e-12};
  const auto m = train_svm(b.X, b.y, opt);
  for (int& v : b.y) v = -v;
  const auto mf = train_svm(b.X, b.y, opt);
  const auto probe = blobs(50, 3, 2.0, 3).X;
  for (Eigen::Index i = 0; i < probe.rows(); ++i) {
    const auto x = row(probe, i);
    EXPECT_NEAR(svm_score(mf, row_span(x)), -svm_score(m, row_span(x)), 1e-8);
  }
}

TEST(Svm, FreeSupportVectorsSitOnTheMargin) {
  const auto b = blobs(60, 4, 2.5, 4);
  const SvmOptions opt{.tolerance = 1e-6};
  const auto m = train_svm(b.X, b.y, opt);
  expect_dual_feasible(m);
  std::size_t free_count = 0;
  const Eigen::VectorXd scores = score_rows(m, b.X);
  for (Eigen::Index j = 0; j < m.dual_coeffs.size(); ++j) {
    const double a = std::abs(m.dual_coeffs(j));
    if (a >= m.cost_C * (1 - 1e-12)) continue;
    ++free_count;
    // Locate the training row this support vector came from.
    const Eigen::MatrixXd Z = m.scaler.apply_rows(b.X);
    Eigen::Index src = -1;
    for (Eigen::Index i = 0; i < Z.rows(); ++i)
      if (Z.row(i) == m.support_vectors.row(j)) src = i;
    ASSERT_GE(src, 0);
    EXPECT_NEAR(b.y[static_cast<std::size_t>(src)] * scores(src), 1.0, 1e-5);
  }
  EXPECT_GT(free_count, 0u);
}

TEST(Svm, FarPointScoresTheBias) {
  const auto b = blobs(20, 2, 3.0, 5);
  const auto m = train_svm(b.X, b.y);
  const Eigen::VectorXd far = Eigen::VectorXd::Constant(2, 1e3);
  EXPECT_NEAR(svm_score(m, row_span(far)), m.bias, 1e-6);
}

TEST(Svm, ScoreMatchesLoopOracle) {
  const auto b = blobs(50, 5, 1.5, 6);
  const auto m = train_svm(b.X, b.y, {.C = 0.7, .zeta = 0.3});
  std::vector<std::vector<double>> sv;
  for (Eigen::Index j = 0; j < m.support_vectors.rows(); ++j) sv.push_back(to_vec(m.support_vectors.row(j).transpose()));
  const auto probe = blobs(40, 5, 1.5, 7).X;
  const Eigen::VectorXd batch = score_rows(m, probe);
  for (Eigen::Index i = 0; i < probe.rows(); ++i) {
    const auto x = row(probe, i);
    const double ref = static_cast<double>(oracle::svm_score(sv, to_vec(m.dual_coeffs), m.bias, m.zeta,
                                                             to_vec(m.scaler.mean), to_vec(m.scaler.spread), to_vec(x)));
    EXPECT_NEAR(svm_score(m, row_span(x)), ref, 1e-10);
    EXPECT_NEAR(batch(i), ref, 1e-10);
    for (int y : {1, -1}) EXPECT_NEAR(margin(m, row_span(x), y), 2.0 * y * ref, 1e-10);
  }
}

TEST(Svm, DefaultKernelWidthIsInverseDimension) {
  const auto b = blobs(10, 4, 3.0, 8);
  EXPECT_EQ(train_svm(b.X, b.y).zeta, 0.25);
}

TEST(Svm, DimensionMismatchRejected) {
  const auto b = blobs(10, 3, 3.0, 9);
  const auto m = train_svm(b.X, b.y);
  const Eigen::VectorXd x = Eigen::VectorXd::Zero(4);
  try {
    svm_score(m, row_span(x));
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidShape);
  }
}

TEST(Svm, UpdateCapReportsTrainingFailure) {
  const auto b = blobs(40, 3, 0.5, 10);
  try {
    train_svm(b.X, b.y, {.max_updates = 2});
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TrainingFailed);
  }
}

TEST(Svm, FeatureMapSelectsRetainedColumns) {
  const auto b = blobs(30, 6, 3.0, 11);
  const std::vector<std::size_t> keep{0, 3, 5};
  const auto map = FeatureMap::select(keep, 6);
  const auto m = train_svm(map.apply_rows(b.X), b.y, {}, map);
  for (Eigen::Index i = 0; i < 5; ++i) {
    const auto full = row(b.X, i);
    const Eigen::VectorXd r = map.apply(row_span(full));
    EXPECT_EQ(score_fingerprint(m, row_span(full)), svm_score(m, row_span(r)));
  }
}

TEST(Decision, SignWithConservativeTie) {
  EXPECT_EQ(decide_score(3.2), 1);
  EXPECT_EQ(decide_score(-0.4), -1);
  EXPECT_EQ(decide_score(0.0), -1);
  EXPECT_EQ(decide_score(-0.0), -1);
}

TEST(Decision, MarginIdentityOverRandomScores) {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> g;
  std::uniform_int_distribution<int> coin(0, 1);
  EXPECT_EQ(margin_of(1.0, 1), 2.0);
  for (int t = 0; t < 10000; ++t) {
    const double f = g(rng);
    const int y = coin(rng) ? 1 : -1;
    const double m = margin_of(f, y);
    EXPECT_EQ(m, 2.0 * y * f);
    EXPECT_EQ(m > 0.0, decide_score(f) == y);
  }
  // At exactly zero the margin is 0 for both labels and the tie rejects.
  EXPECT_EQ(margin_of(0.0, 1), 0.0);
  EXPECT_EQ(decide_score(0.0), -1);
  EXPECT_THROW(margin_of(1.0, 0), Error);
}

TEST(ModelJson, RoundTripIsBitIdentical) {
  const auto b = blobs(25, 4, 2.0, 13);
  auto m = train_svm(b.X, b.y, {.C = 0.9});
  const auto j = model_to_json(m);
  const auto back = model_from_json(nlohmann::json::parse(j.dump()));
  EXPECT_EQ(back.support_vectors, m.support_vectors);
  EXPECT_EQ(back.dual_coeffs, m.dual_coeffs);
  EXPECT_EQ(back.scaler.mean, m.scaler.mean);
  EXPECT_EQ(back.scaler.spread, m.scaler.spread);
  EXPECT_EQ(back.bias, m.bias);
  EXPECT_EQ(back.zeta, m.zeta);
  EXPECT_EQ(back.cost_C, m.cost_C);
  EXPECT_EQ(back.features.indices, m.features.indices);
  EXPECT_EQ(model_to_json(back).dump(), j.dump());
  const auto probe = blobs(10, 4, 2.0, 14).X;
  EXPECT_EQ(score_rows(back, probe), score_rows(m, probe));
}

TEST(ModelJson, ProjectionMapRoundTrip) {
  ProjectionBasis pb;
  pb.basis = Eigen::MatrixXd::Random(5, 3);
  pb.mean = Eigen::VectorXd::Random(5);
  const auto map = FeatureMap::project(pb, 2);
  const auto back = feature_map_from_json(nlohmann::json::parse(feature_map_to_json(map).dump()));
  EXPECT_EQ(back.kind, FeatureMap::Kind::Projection);
  EXPECT_EQ(back.basis, map.basis);
  EXPECT_EQ(back.mean, map.mean);
  EXPECT_EQ(back.input_dim, 5u);
}

TEST(ModelJson, SaveAndLoadFile) {
  const auto b = blobs(15, 2, 3.0, 15);
  const auto m = train_svm(b.X, b.y);
  const auto path = std::filesystem::temp_directory_path() / "rfdna_model_test.json";
  save_model(path, m);
  const auto back = load_model(path);
  EXPECT_EQ(back.dual_coeffs, m.dual_coeffs);
  std::filesystem::remove(path);
  EXPECT_THROW(load_model(path), Error);
}

TEST(ModelJson, InconsistentDimensionsRejected) {
  const auto b = blobs(15, 2, 3.0, 16);
  auto j = model_to_json(train_svm(b.X, b.y));
  j["dual_coeffs"].push_back(0.5);
  try {
    model_from_json(j);
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidModel);
  }
}
