#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "rfdna/tfr.hpp"

using namespace rfdna;

namespace {

std::vector<cplx> random_signal(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::vector<cplx> s(n);
  for (auto& v : s) v = {g(rng), g(rng)};
  return s;
}

ComplexBurst as_burst(std::vector<cplx> s) {
  ComplexBurst b;
  b.samples = std::move(s);
  return b;
}

}  // namespace

TEST(Dgt, UnitImpulseGivesWindowMagnitude) {
  std::vector<cplx> s(150, cplx{0, 0});
  s[0] = 1.0;
  const GaborParams p;
  const auto G = dgt(as_burst(s), p);
  ASSERT_EQ(G.rows(), 150);
  ASSERT_EQ(G.cols(), 150);
  for (Eigen::Index m = 0; m < G.rows(); ++m) {
    const double expect = gabor_window(1 - (m + 1), 150, p.window_sigma);
    for (Eigen::Index k = 0; k < G.cols(); ++k) EXPECT_NEAR(std::abs(G(m, k)), expect, 1e-14);
  }
}

TEST(Dgt, MatchesTripleLoop) {
  const GaborParams p;
  const GaborAnalyzer a(p);
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto s = random_signal(150, seed);
    const auto G = a.transform(s);
    const auto ref = oracle::dgt(s, p.M, p.K_G, p.N_delta, p.window_sigma);
    long double peak = 0, err = 0;
    for (std::size_t m = 0; m < p.M; ++m)
      for (std::size_t k = 0; k < p.K_G; ++k) {
        const auto& r = ref[m][k];
        const cplx g = G(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(k));
        peak = std::max(peak, std::abs(r));
        err = std::max(err, std::abs(oracle::cld(g.real(), g.imag()) - r));
      }
    EXPECT_LE(static_cast<double>(err / peak), 1e-10);
  }
}

TEST(Dgt, SmallerGridAndTimeStep) {
  GaborParams p;
  p.M = 20;
  p.K_G = 10;
  p.N_delta = 2;
  p.window_sigma = 4.0;
  const auto s = random_signal(40, 9);
  const auto G = GaborAnalyzer(p).transform(s);
  const auto ref = oracle::dgt(s, p.M, p.K_G, p.N_delta, p.window_sigma);
  for (std::size_t m = 0; m < p.M; ++m)
    for (std::size_t k = 0; k < p.K_G; ++k) {
      const cplx g = G(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(k));
      EXPECT_NEAR(g.real(), static_cast<double>(ref[m][k].real()), 1e-11);
      EXPECT_NEAR(g.imag(), static_cast<double>(ref[m][k].imag()), 1e-11);
    }
}

TEST(Dgt, LinearInScale) {
  const auto s = random_signal(150, 4);
  auto t = s;
  for (auto& v : t) v *= 4.0;  // power of two: exact in floating point
  const GaborAnalyzer a{GaborParams{}};
  EXPECT_EQ(a.transform(t), (a.transform(s) * 4.0).eval());

  const cplx c{0.3, -1.7};
  for (auto& v : t) v = v / 4.0 * c;
  const auto lhs = a.transform(t), rhs = (a.transform(s) * c).eval();
  EXPECT_LE((lhs - rhs).cwiseAbs().maxCoeff(), 1e-12 * rhs.cwiseAbs().maxCoeff());
}

TEST(Dgt, ShortBurstAndBadParams) {
  try {
    dgt(as_burst(random_signal(149, 1)), GaborParams{});
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidLength);
  }
  GaborParams p;
  p.K_G = 7;  // 150 mod 7 != 0
  EXPECT_THROW(p.validate(), Error);
  p = GaborParams{};
  p.M = 10;
  p.K_G = 10;
  p.N_delta = 10;  // not oversampled
  EXPECT_THROW(p.validate(), Error);
  p = GaborParams{};
  p.window_sigma = 0.0;
  EXPECT_THROW(GaborAnalyzer{p}, Error);
}

TEST(NormalizeTf, PeakIsExactlyOne) {
  const auto G = GaborAnalyzer{GaborParams{}}.transform(random_signal(150, 5));
  const auto tf = normalize_tf(G);
  EXPECT_EQ(tf.values.maxCoeff(), 1.0);
  EXPECT_GE(tf.values.minCoeff(), 0.0);
  EXPECT_TRUE(tf.normalized);
  EXPECT_TRUE(tf.centered);
}

TEST(NormalizeTf, EqualMagnitudesAllOne) {
  Eigen::MatrixXcd G(6, 8);
  for (Eigen::Index i = 0; i < G.rows(); ++i)
    for (Eigen::Index j = 0; j < G.cols(); ++j) G(i, j) = std::polar(2.5, 0.37 * static_cast<double>(i * 8 + j));
  const auto tf = normalize_tf(G);
  for (Eigen::Index i = 0; i < G.size(); ++i) EXPECT_NEAR(tf.values(i), 1.0, 1e-15);
}

TEST(NormalizeTf, ZeroGridIsDegenerate) {
  try {
    normalize_tf(Eigen::MatrixXcd::Zero(4, 4));
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateTF);
  }
}

TEST(NormalizeTf, ZeroFrequencyLandsInCentreColumn) {
  Eigen::MatrixXcd G = Eigen::MatrixXcd::Constant(3, 150, cplx{0.1, 0});
  G.col(0).setConstant(cplx{1.0, 0});
  const auto tf = normalize_tf(G);
  EXPECT_EQ(tf.values(1, 75), 1.0);
  EXPECT_NEAR(tf.values(1, 0), 0.01, 1e-15);
}

TEST(NormalizeTf, InvariantToGridScaling) {
  const auto G = GaborAnalyzer{GaborParams{}}.transform(random_signal(150, 6));
  EXPECT_EQ(normalize_tf(G).values, normalize_tf((G * 8.0).eval()).values);
  const auto a = normalize_tf(G).values, b = normalize_tf((G * cplx{0.0, 3.3}).eval()).values;
  EXPECT_LE((a - b).cwiseAbs().maxCoeff(), 1e-12);
}
