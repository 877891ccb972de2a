#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "oracles.hpp"
#include "rfdna/modelsel.hpp"

using namespace rfdna;

namespace {

CandidateModel candidate(std::size_t n_r, double tvr, double fvr, std::vector<double> pos, std::vector<double> neg) {
  CandidateModel c;
  c.n_r = n_r;
  c.tvr_train = tvr;
  c.fvr_others_train = fvr;
  c.pmf_pair = margin_pmfs(pos, neg, 10);
  return c;
}

// PMF pair with a chosen BC: pos on one bin, neg split between that bin and a far one.
CandidateModel with_bc(std::size_t n_r, double overlap_mass) {
  std::vector<double> pos(100, 1.0), neg;
  const auto shared = static_cast<std::size_t>(overlap_mass * 100);
  for (std::size_t i = 0; i < 100; ++i) neg.push_back(i < shared ? 1.0 : -5.0);
  return candidate(n_r, 0.95, 0.05, pos, neg);
}

}  // namespace

TEST(MarginPmfs, IdenticalMultisetsOverlapFully) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  std::vector<double> m(500);
  for (auto& v : m) v = g(rng);
  const auto p = margin_pmfs(m, m);
  EXPECT_NEAR(p.bc, 1.0, 1e-12);
  EXPECT_EQ(p.pmf_pos.size(), 100u);
}

TEST(MarginPmfs, SeparatedRangesDoNotOverlap) {
  const std::vector<double> a{1.0, 1.5, 2.0}, b{-3.0, -2.5};
  EXPECT_EQ(margin_pmfs(a, b).bc, 0.0);
}

TEST(MarginPmfs, BcMatchesDirectArithmeticOnExportedHistograms) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g;
  std::vector<double> a(300), b(200);
  for (auto& v : a) v = 1.0 + g(rng);
  for (auto& v : b) v = -0.5 + 1.5 * g(rng);
  const auto p = margin_pmfs(a, b, 37);
  std::vector<long double> pa(p.pmf_pos.begin(), p.pmf_pos.end()), pb(p.pmf_neg.begin(), p.pmf_neg.end());
  EXPECT_NEAR(p.bc, static_cast<double>(oracle::bhattacharyya(pa, pb)), 1e-12);
  // The exported histograms are the independent histogram of each sample over the pooled edges.
  const auto edges = p.bin_edges();
  ASSERT_EQ(edges.size(), 38u);
  const auto ha = oracle::histogram(a, edges.front(), edges.back(), 37);
  for (std::size_t k = 0; k < 37; ++k) EXPECT_NEAR(p.pmf_pos[k], static_cast<double>(ha[k]), 1e-15);
  double sa = 0, sb = 0;
  for (double v : p.pmf_pos) sa += v;
  for (double v : p.pmf_neg) sb += v;
  EXPECT_NEAR(sa, 1.0, 1e-12);
  EXPECT_NEAR(sb, 1.0, 1e-12);
}

TEST(MarginPmfs, EmptySetRejected) {
  try {
    margin_pmfs(std::vector<double>{}, std::vector<double>{1.0});
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidInput);
  }
}

TEST(ModelQuality, TranslatedCopyGivesShiftAsMeanDistance) {
  // Shifting a PMF by three unit bins moves its mean by 3.
  MarginPmfPair p;
  p.bins = SharedBins{0.0, 10.0, 10};
  p.pmf_pos = {0.1, 0.4, 0.3, 0.2, 0, 0, 0, 0, 0, 0};
  p.pmf_neg = {0, 0, 0, 0.1, 0.4, 0.3, 0.2, 0, 0, 0};
  p.stats_pos = pmf_stats(p.pmf_pos, p.bins);
  p.stats_neg = pmf_stats(p.pmf_neg, p.bins);
  EXPECT_NEAR(model_quality(p).mean_distance, 3.0, 1e-12);
  EXPECT_NEAR(p.stats_pos.variance, p.stats_neg.variance, 1e-12);
}

TEST(ModelQuality, SingleBinPmfsHaveZeroVariance) {
  const std::vector<double> a(10, 3.0), b(7, 3.0);
  const auto q = model_quality(margin_pmfs(a, b));
  EXPECT_EQ(q.variance_sum, 0.0);
  EXPECT_EQ(q.mean_distance, 0.0);
  EXPECT_EQ(q.bc, 1.0);
}

TEST(ModelQuality, SeparatedPairScoresBelowOverlappedPair) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  std::vector<double> sel_pos, sel_neg, rej_pos, rej_neg;
  for (int i = 0; i < 1000; ++i) {
    sel_pos.push_back(4.0 + 0.5 * g(rng));
    sel_neg.push_back(4.5 + 0.5 * g(rng));
    rej_pos.push_back(1.0 + 1.5 * g(rng));
    rej_neg.push_back(-0.5 + 1.5 * g(rng));
  }
  // selected: both classes far on the positive side; not selected: straddling zero
  const auto well = model_quality(margin_pmfs(sel_pos, std::vector<double>(sel_neg.begin(), sel_neg.end())));
  for (auto& v : sel_neg) v = -v;
  const auto sep = model_quality(margin_pmfs(sel_pos, sel_neg));
  const auto over = model_quality(margin_pmfs(rej_pos, rej_neg));
  EXPECT_LT(sep.bc, over.bc);
  EXPECT_GT(sep.mean_distance, over.mean_distance);
  EXPECT_GT(well.bc, sep.bc);
}

TEST(SelectBest, SinglePassingCandidate) {
  const std::vector<CandidateModel> c{with_bc(5, 0.3)};
  EXPECT_EQ(select_best(c).n_r, 5u);
}

TEST(SelectBest, LowerBcWins) {
  const std::vector<CandidateModel> c{with_bc(20, 0.4 * 0.4), with_bc(40, 0.1 * 0.1)};
  EXPECT_NEAR(c[0].pmf_pair.bc, 0.4, 1e-12);
  EXPECT_NEAR(c[1].pmf_pair.bc, 0.1, 1e-12);
  EXPECT_EQ(select_best_index(c), 1u);
}

TEST(SelectBest, AllFailTvrFallsBackToHighestTvr) {
  std::vector<CandidateModel> c{with_bc(1, 0.1), with_bc(11, 0.5), with_bc(21, 0.2), with_bc(31, 0.2)};
  c[0].tvr_train = 0.60;
  c[1].tvr_train = 0.85;
  c[2].tvr_train = 0.80;
  c[3].tvr_train = 0.85;
  EXPECT_EQ(select_best_index(c), 1u);  // ties on TVR go to fewer features
}

TEST(SelectBest, FvrGateApplies) {
  std::vector<CandidateModel> c{with_bc(1, 0.01), with_bc(11, 0.5)};
  c[0].fvr_others_train = 0.11;
  EXPECT_FALSE(c[0].passes_gates());
  EXPECT_EQ(select_best_index(c), 1u);
  c[0].fvr_others_train = 0.10;
  c[0].tvr_train = 0.90;
  EXPECT_TRUE(c[0].passes_gates());
  EXPECT_EQ(select_best_index(c), 0u);
}

TEST(SelectBest, DominatedCandidateNeverChosen) {
  // Equal BC, so mean distance then variance then N_r decide.
  auto a = candidate(10, 0.95, 0.0, {2.0, 2.0, 3.0}, {-3.0, -3.0, -2.0});
  auto b = candidate(30, 0.95, 0.0, {4.0, 4.0, 6.0}, {-6.0, -6.0, -4.0});
  ASSERT_EQ(a.pmf_pair.bc, 0.0);
  ASSERT_EQ(b.pmf_pair.bc, 0.0);
  std::vector<CandidateModel> c{a, b};
  EXPECT_EQ(select_best_index(c), 1u);
  auto d = b;
  d.n_r = 5;
  c = {b, d};
  EXPECT_EQ(select_best_index(c), 1u);
}

TEST(SelectBest, EmptyListRejected) {
  try {
    select_best(std::vector<CandidateModel>{});
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidInput);
  }
}

TEST(CandidateLedger, OneRowPerCandidateWithSelectionFlag) {
  const std::vector<CandidateModel> c{with_bc(1, 0.5), with_bc(11, 0.1), with_bc(21, 0.2)};
  const auto sel = select_best_index(c);
  std::ostringstream os;
  write_candidate_ledger(os, c, sel);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "N_r,tvr_train,fvr_others_train,bc,mean_distance,variance_sum,selected");
  int rows = 0, flagged = 0;
  while (std::getline(is, line)) {
    ++rows;
    if (line.back() == '1') {
      ++flagged;
      EXPECT_EQ(line.rfind("11,", 0), 0u);
    }
  }
  EXPECT_EQ(rows, 3);
  EXPECT_EQ(flagged, 1);
}
