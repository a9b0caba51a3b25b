#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "denscoint/errors.hpp"
#include "denscoint/rank_test.hpp"

using namespace denscoint;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixXd gaussian(int rows, int cols, std::mt19937_64& eng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = n01(eng);
  return m;
}

MatrixXd ar1(int T, int R, double rho, std::mt19937_64& eng) {
  MatrixXd e = gaussian(T, R, eng);
  for (int t = 1; t < T; ++t) e.row(t) += rho * e.row(t - 1);
  return e;
}

MatrixXd random_walk(int T, int R, std::mt19937_64& eng) { return ar1(T, R, 1.0, eng); }

MatrixXd demean(MatrixXd m) {
  m.rowwise() -= m.colwise().mean();
  return m;
}

// Clr rows built from a random walk along the first `walks` Fourier directions
// and stationary AR(0.5) noise along the next `5 - walks` directions.
ClrSeries mixed_series(const Grid& grid, int T, int walks, std::mt19937_64& eng) {
  OrthonormalBasis b = fourier_basis_clr(grid, 5);
  MatrixXd coef(T, 5);
  if (walks > 0) coef.leftCols(walks) = random_walk(T, walks, eng);
  if (walks < 5) coef.rightCols(5 - walks) = ar1(T, 5 - walks, 0.5, eng);
  return ClrSeries(grid, coef * b.columns().transpose());
}

double ks_distance(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
  }
  return d;
}

}  // namespace

TEST(Scores, Examples) {
  Grid g(-3, 3, 101);
  OrthonormalBasis b = fourier_basis_clr(g, 3);
  EigenSystem es{VectorXd::Ones(3), b};

  MatrixXd same = b.columns().col(1).transpose().replicate(8, 1);
  EXPECT_LT(scores(ClrSeries(g, same), es, 3).rows().cwiseAbs().maxCoeff(), 1e-14);

  VectorXd c(8);
  c << 1, 4, 2, 8, 5, 7, 1, 3;
  MatrixXd rows = c * b.columns().col(0).transpose();
  ScoreSeries s = scores(ClrSeries(g, rows), es, 3);
  VectorXd cd = c.array() - c.mean();
  EXPECT_LT((s.rows().col(0) - cd).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT(s.rows().rightCols(2).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT(s.rows().colwise().sum().cwiseAbs().maxCoeff(), 1e-10);

  ScoreSeries raw = scores(ClrSeries(g, rows), es, 1, false);
  EXPECT_LT((raw.rows().col(0) - c).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_THROW(scores(ClrSeries(g, rows), es, 4), DimensionError);
  EXPECT_THROW(ScoreSeries(MatrixXd::Zero(2, 2)), DimensionError);
}

TEST(QsKernel, Values) {
  EXPECT_EQ(qs_kernel(0.0), 1.0);
  std::mt19937_64 eng(1);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int i = 0; i < 20; ++i) {
    double x = u(eng);
    EXPECT_EQ(qs_kernel(x), qs_kernel(-x));
  }
  // Direct evaluation in long double at x = 1.
  const long double a = 6.0L * std::numbers::pi_v<long double> / 5.0L;
  const long double direct = 25.0L / (12.0L * std::numbers::pi_v<long double> * std::numbers::pi_v<long double>) *
                             (std::sin(a) / a - std::cos(a));
  EXPECT_NEAR(qs_kernel(1.0), static_cast<double>(direct), 1e-14);
  // The small-argument series and the closed form agree across the switch.
  for (double x : {1e-3, 2e-3, 2.6e-3, 2.7e-3, 5e-3}) {
    long double ax = 6.0L * std::numbers::pi_v<long double> * x / 5.0L;
    long double closed = 3.0L / (ax * ax) * (std::sin(ax) / ax - std::cos(ax));
    EXPECT_NEAR(qs_kernel(x), static_cast<double>(closed), 1e-9);
  }
}

TEST(AndrewsBandwidth, Examples) {
  std::mt19937_64 eng(2);
  BandwidthChoice iid = andrews_bandwidth(gaussian(1000, 1, eng));
  EXPECT_FALSE(iid.fallback);
  EXPECT_LT(iid.bandwidth, 2.5);
  EXPECT_GE(iid.bandwidth, 1.0);
  BandwidthChoice dep = andrews_bandwidth(ar1(1000, 1, 0.5, eng));
  EXPECT_GT(dep.bandwidth, iid.bandwidth);

  MatrixXd zero_rho(12, 1);
  zero_rho << 1, 0, -1, 0, 1, 0, -1, 0, 1, 0, -1, 0;
  BandwidthChoice flat = andrews_bandwidth(zero_rho);
  EXPECT_EQ(flat.alpha2, 0.0);
  EXPECT_EQ(flat.bandwidth, 1.0);

  BandwidthChoice degenerate = andrews_bandwidth(MatrixXd::Ones(20, 1));
  EXPECT_TRUE(degenerate.fallback);
  EXPECT_NEAR(degenerate.bandwidth, std::pow(20.0, 0.2), 1e-12);
  EXPECT_THROW(andrews_bandwidth(MatrixXd::Ones(9, 1)), DimensionError);
}

TEST(LongrunCov, ZeroBandwidthIsSampleCovariance) {
  std::mt19937_64 eng(3);
  MatrixXd x = ar1(200, 3, 0.6, eng);
  MatrixXd y = demean(x);
  MatrixXd gamma0 = y.transpose() * y / 200.0;
  LongRunCov lr = longrun_cov(x, 0.0);
  EXPECT_LT((lr.sigma - gamma0).cwiseAbs().maxCoeff(), 1e-12);
  LongRunCov hac = longrun_cov(x, 5.0);
  EXPECT_LT((hac.sigma - hac.sigma.transpose()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_GT((hac.sigma - gamma0).cwiseAbs().maxCoeff(), 0.1);
  EXPECT_EQ(hac.kernel, "quadratic-spectral");
  EXPECT_THROW(longrun_cov(x, -1.0), ConfigError);
}

TEST(LongrunCov, IidScoresMatchSampleCovariance) {
  std::mt19937_64 eng(4);
  double ratio = 0.0;
  const int reps = 200;
  for (int r = 0; r < reps; ++r) {
    MatrixXd x = gaussian(1000, 2, eng);
    BandwidthChoice bw = andrews_bandwidth(x);
    LongRunCov lr = longrun_cov(x, bw.bandwidth);
    LongRunCov g0 = longrun_cov(x, 0.0);
    ratio += lr.sigma.trace() / g0.sigma.trace();
  }
  EXPECT_NEAR(ratio / reps, 1.0, 0.02);
}

TEST(GenEigMin, Examples) {
  MatrixXd q = MatrixXd::Zero(2, 2);
  q(0, 0) = 1.0;
  q(1, 1) = 2.0;
  EXPECT_NEAR(gen_eig_min(q, MatrixXd::Identity(2, 2)), 1.0, 1e-14);

  std::mt19937_64 eng(5);
  MatrixXd a = gaussian(4, 4, eng);
  MatrixXd s = a * a.transpose() + MatrixXd::Identity(4, 4);
  EXPECT_NEAR(gen_eig_min(s, s), 1.0, 1e-10);

  MatrixXd b = gaussian(4, 4, eng);
  MatrixXd qq = b * b.transpose();
  double base = gen_eig_min(qq, s);
  MatrixXd m = gaussian(4, 4, eng);
  EXPECT_NEAR(gen_eig_min(m * qq * m.transpose(), m * s * m.transpose()), base, 1e-10 * std::max(1.0, base));

  MatrixXd singular = MatrixXd::Zero(2, 2);
  singular(0, 0) = 1.0;
  EXPECT_THROW(gen_eig_min(q, singular), SingularWeight);
  EXPECT_THROW(gen_eig_min(q, MatrixXd::Identity(3, 3)), DimensionError);
}

TEST(TauStatistic, CongruenceInvariance) {
  std::mt19937_64 eng(6);
  MatrixXd z = demean(random_walk(300, 3, eng));
  MatrixXd m = gaussian(3, 3, eng);
  ScoreSeries a(z), b(z * m.transpose());
  for (double bw : {0.0, 3.0, 7.5}) {
    double ta = tau_statistic(a, bw);
    EXPECT_NEAR(tau_statistic(b, bw), ta, 1e-9 * std::max(1.0, ta));
  }
  TauResult d = tau_details(a);
  EXPECT_NEAR(d.tau, tau_statistic(a, d.bandwidth), 1e-15);
}

TEST(TauStatistic, HacDiffersFromGammaZeroOnAutocorrelatedIncrements) {
  std::mt19937_64 eng(7);
  MatrixXd inc = ar1(500, 2, 0.6, eng);
  MatrixXd z = inc;
  for (int t = 1; t < 500; ++t) z.row(t) += z.row(t - 1);
  ScoreSeries s(demean(z));
  double hac = tau_statistic(s);
  double g0 = tau_statistic(s, 0.0);
  EXPECT_GT(std::abs(hac - g0), 0.1 * g0);
}

TEST(TauStatistic, RandomWalkMatchesLimitLaw) {
  auto reference = simulate_limit_draws({1}, 20000, 1000, true, RngSeed{11, 0}).front();
  std::mt19937_64 eng(8);
  std::vector<double> taus;
  for (int r = 0; r < 2000; ++r) taus.push_back(tau_statistic(ScoreSeries(demean(random_walk(500, 1, eng)))));
  EXPECT_LT(ks_distance(taus, reference), 0.05);
}

TEST(TauStatistic, StationaryScoresGoToZero) {
  std::mt19937_64 eng(9);
  std::vector<double> taus;
  for (int r = 0; r < 51; ++r) taus.push_back(tau_statistic(ScoreSeries(demean(ar1(2000, 1, 0.5, eng)))));
  std::nth_element(taus.begin(), taus.begin() + 25, taus.end());
  EXPECT_LT(taus[25], builtin_critical_values().value(1, 0.01));
}

TEST(CriticalValues, BuiltinTable) {
  CriticalValueTable t = builtin_critical_values();
  EXPECT_EQ(t.max_dimension(), 7);
  EXPECT_TRUE(t.demeaned);
  EXPECT_EQ(t.provenance, "builtin");
  EXPECT_EQ(t.value(1, 0.05), 0.0365);
  EXPECT_EQ(t.value(3, 0.01), 0.0123);
  EXPECT_EQ(t.value(7, 0.10), 0.0081);
  for (int R = 1; R <= 7; ++R) {
    for (int i = 0; i < 3; ++i) {
      EXPECT_GT(t.rows[R - 1].values[i], 0.0);
      if (i) EXPECT_GT(t.rows[R - 1].values[i], t.rows[R - 1].values[i - 1]);
      if (R > 1) EXPECT_LE(t.rows[R - 1].values[i], t.rows[R - 2].values[i]);
    }
  }
  EXPECT_THROW(t.value(8, 0.05), ConfigError);
  EXPECT_THROW(level_index(0.2), ConfigError);
}

TEST(CriticalValues, SimulatedTableShape) {
  CriticalValueTable t = simulate_critical_table({1, 2, 3}, 8000, 500, true, RngSeed{12, 0});
  EXPECT_EQ(t.provenance, "simulated");
  EXPECT_EQ(t.paths, 8000);
  CriticalValueTable ref = builtin_critical_values();
  for (int R = 1; R <= 3; ++R) {
    for (int i = 0; i < 3; ++i) {
      const auto& row = t.rows[R - 1];
      EXPECT_GT(row.mc_se[i], 0.0);
      EXPECT_NEAR(row.values[i], ref.rows[R - 1].values[i], std::max(0.003, 4.0 * row.mc_se[i]));
      if (i) EXPECT_GT(row.values[i], row.values[i - 1]);
      if (R > 1) EXPECT_LT(row.values[i], t.rows[R - 2].values[i]);
    }
  }
  // A single row reproduces the matching table row.
  CriticalValueRow two = simulate_critical_values(2, 8000, 500, true, RngSeed{12, 0});
  EXPECT_EQ(two.values, t.rows[1].values);
  EXPECT_THROW(simulate_critical_values(1, 999, 500, true, RngSeed{}), ConfigError);
  EXPECT_THROW(simulate_critical_values(1, 1000, 199, true, RngSeed{}), ConfigError);
}

TEST(CriticalValues, DemeanedDiffersFromObserved) {
  CriticalValueRow d = simulate_critical_values(1, 20000, 500, true, RngSeed{13, 0});
  CriticalValueRow o = simulate_critical_values(1, 20000, 500, false, RngSeed{13, 0});
  EXPECT_LT(d.values[1], o.values[1]);
}

TEST(CriticalValues, StableInSteps) {
  auto a = simulate_critical_table({1, 2, 3}, 20000, 1000, true, RngSeed{14, 0});
  auto b = simulate_critical_table({1, 2, 3}, 20000, 2000, true, RngSeed{14, 0});
  for (int R = 0; R < 3; ++R)
    for (int i = 0; i < 3; ++i) EXPECT_LT(std::abs(a.rows[R].values[i] - b.rows[R].values[i]), 0.001);
}

TEST(SequentialRank, WagesDecisionPattern) {
  CriticalValueTable t = builtin_critical_values();
  std::vector<double> taus{0.05174, 0.01181};
  for (double level : {0.01, 0.05, 0.10}) {
    RankTestReport rep = sequential_rank_from_taus(taus, level, t);
    EXPECT_EQ(rep.selected, 1);
    ASSERT_EQ(rep.steps.size(), 2u);
    EXPECT_EQ(rep.steps[0].R, 2);
    EXPECT_TRUE(rep.steps[0].reject[level_index(level)]);
    EXPECT_FALSE(rep.steps[1].reject[level_index(level)]);
  }
}

TEST(SequentialRank, StrictLowerTailAtBorderline) {
  CriticalValueTable t = builtin_critical_values();
  RankTestReport rep = sequential_rank_from_taus({0.03638}, 0.05, t);
  EXPECT_EQ(rep.selected, 0);
  EXPECT_EQ(sequential_rank_from_taus({0.0365}, 0.05, t).selected, 1);
  EXPECT_EQ(rep.selected_by_level[0], 1);
}

TEST(SequentialRank, ConfigErrors) {
  CriticalValueTable t = builtin_critical_values();
  EXPECT_THROW(sequential_rank_from_taus({}, 0.05, t), ConfigError);
  EXPECT_THROW(sequential_rank_from_taus(std::vector<double>(8, 1.0), 0.05, t), ConfigError);
  EXPECT_THROW(sequential_rank_from_taus({1.0}, 0.02, t), ConfigError);
  Grid g(-3, 3, 51);
  std::mt19937_64 eng(15);
  ClrSeries s = mixed_series(g, 50, 1, eng);
  EXPECT_THROW(sequential_rank(s, 2, 0.05, t, false), ConfigError);
}

TEST(SequentialRank, SelectsOneForSingleRandomWalk) {
  Grid g(-3, 3, 51);
  CriticalValueTable t = builtin_critical_values();
  std::mt19937_64 eng(16);
  int hits = 0;
  const int reps = 200;
  for (int r = 0; r < reps; ++r) {
    RankTestReport rep = sequential_rank(mixed_series(g, 1000, 1, eng), 5, 0.05, t);
    if (rep.selected == 1) ++hits;
    if (r == 0) {
      EXPECT_EQ(rep.scree.size(), 25);
      EXPECT_EQ(rep.steps.size(), 5u);
    }
  }
  EXPECT_GE(hits, 180);
}

TEST(SequentialRank, StationarySeriesSelectsZero) {
  Grid g(-3, 3, 51);
  CriticalValueTable t = builtin_critical_values();
  std::mt19937_64 eng(17);
  int zeros = 0;
  const int reps = 50;
  for (int r = 0; r < reps; ++r) {
    if (sequential_rank(mixed_series(g, 1000, 0, eng), 5, 0.05, t).selected == 0) ++zeros;
  }
  EXPECT_GT(zeros, reps / 2);
}
