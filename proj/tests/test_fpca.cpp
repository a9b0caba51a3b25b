#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "denscoint/errors.hpp"
#include "denscoint/fpca.hpp"
#include "denscoint/simulate.hpp"

using namespace denscoint;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

const Grid& small_grid() {
  static const Grid g(-3, 3, 201);
  return g;
}

OrthonormalBasis fourier(int m) { return fourier_basis_clr(small_grid(), m); }

// Rows c_t v + sum_j noise_tj e_j: a random walk along v = e_0 and iid noise
// of size `noise` along e_1..e_4.
ClrSeries walk_plus_noise(int T, double noise, std::uint64_t seed, double rho_noise = 0.0) {
  OrthonormalBasis b = fourier(5);
  std::mt19937_64 eng(seed);
  std::normal_distribution<double> n01(0.0, 1.0);
  MatrixXd rows(T, small_grid().size());
  double c = 0.0;
  VectorXd e = VectorXd::Zero(4);
  for (int t = 0; t < T; ++t) {
    c += n01(eng);
    for (int j = 0; j < 4; ++j) e[j] = rho_noise * e[j] + noise * n01(eng);
    rows.row(t) = (c * b.columns().col(0) + b.columns().rightCols(4) * e).transpose();
  }
  return ClrSeries(small_grid(), rows);
}

double trace(const LinearMap& v) { return v.matrix().trace(); }

}  // namespace

TEST(ClrSeries, ValidatesRows) {
  const Grid& g = small_grid();
  EXPECT_THROW(ClrSeries(g, MatrixXd::Zero(1, g.size())), DimensionError);
  EXPECT_THROW(ClrSeries(g, MatrixXd::Ones(3, g.size())), DimensionError);
  EXPECT_THROW(ClrSeries(g, MatrixXd::Zero(3, g.size() + 1)), DimensionError);
  EXPECT_NO_THROW(ClrSeries(g, MatrixXd::Zero(3, g.size())));
}

TEST(EmpiricalCov, ConstantSeriesGivesZeroMap) {
  OrthonormalBasis b = fourier(1);
  MatrixXd rows = b.columns().col(0).transpose().replicate(10, 1);
  LinearMap v = empirical_cov(ClrSeries(small_grid(), rows));
  EXPECT_LT(v.matrix().cwiseAbs().maxCoeff(), 1e-14);
}

TEST(EmpiricalCov, SeriesInSpanIsRankOne) {
  OrthonormalBasis b = fourier(2);
  VectorXd v0 = b.columns().col(1);
  MatrixXd rows(6, small_grid().size());
  for (int t = 0; t < 6; ++t) rows.row(t) = (std::sin(t + 1.0) * v0).transpose();
  LinearMap v = empirical_cov(ClrSeries(small_grid(), rows));
  EigenSystem es = eigenpairs(v, 3);
  EXPECT_GT(es.eigenvalues[0], 0.1);
  EXPECT_LT(es.eigenvalues[1], 1e-12 * es.eigenvalues[0]);
  EXPECT_NEAR(std::abs(dot(es.eigenfunctions.columns().col(0), v0, small_grid())), 1.0, 1e-10);
}

TEST(EmpiricalCov, TraceEqualsMeanSquaredNorm) {
  ClrSeries s = walk_plus_noise(50, 0.5, 1);
  const Grid& g = small_grid();
  VectorXd mean = s.mean();
  double oracle = 0.0;
  for (int t = 0; t < s.length(); ++t) {
    double n = norm(s.rows().row(t).transpose() - mean, g);
    oracle += n * n;
  }
  oracle /= s.length();
  // The isometric form has the same trace; its diagonal sums w_i (x_ti - m_i)^2.
  EXPECT_NEAR(trace(empirical_cov(s)), oracle, 1e-10 * std::max(1.0, oracle));
}

TEST(EmpiricalCov, SymmetricAndPsd) {
  ClrSeries s = walk_plus_noise(40, 0.3, 2);
  LinearMap v = empirical_cov(s);
  const Grid& g = small_grid();
  std::mt19937_64 eng(5);
  std::normal_distribution<double> n01(0.0, 1.0);
  for (int r = 0; r < 10; ++r) {
    VectorXd f(g.size()), h(g.size());
    for (int i = 0; i < g.size(); ++i) {
      f[i] = n01(eng);
      h[i] = n01(eng);
    }
    double lhs = dot(v.matrix() * f, h, g), rhs = dot(f, v.matrix() * h, g);
    EXPECT_NEAR(lhs, rhs, 1e-12 * std::max(1.0, std::abs(lhs)));
    EXPECT_GE(dot(v.matrix() * f, f, g), -1e-12);
  }
}

TEST(EmpiricalCov, UncenteredVariant) {
  OrthonormalBasis b = fourier(1);
  MatrixXd rows = b.columns().col(0).transpose().replicate(4, 1);
  LinearMap v = empirical_cov(ClrSeries(small_grid(), rows), false);
  EXPECT_NEAR(trace(v), 1.0, 1e-10);
}

TEST(Eigenpairs, RankOneMap) {
  OrthonormalBasis b = fourier(3);
  VectorXd v = b.columns().col(2);
  LinearMap a = 3.5 * rank_one(v, v, small_grid());
  EigenSystem es = eigenpairs(a, 2);
  EXPECT_NEAR(es.eigenvalues[0], 3.5, 1e-10);
  EXPECT_NEAR(std::abs(dot(es.eigenfunctions.columns().col(0), v, small_grid())), 1.0, 1e-10);
}

TEST(Eigenpairs, KnownSpectrumAndResiduals) {
  OrthonormalBasis b = fourier(2);
  LinearMap a = spectral_map(b, (VectorXd(2) << 1.0, 2.0).finished());
  EigenSystem es = eigenpairs(a, 5);
  EXPECT_NEAR(es.eigenvalues[0], 2.0, 1e-10);
  EXPECT_NEAR(es.eigenvalues[1], 1.0, 1e-10);
  EXPECT_LE(es.eigenvalues.sum(), trace(a) + 1e-10);
  for (int j = 0; j < 5; ++j) {
    VectorXd v = es.eigenfunctions.columns().col(j);
    EXPECT_LT(norm(a.matrix() * v - es.eigenvalues[j] * v, small_grid()), 1e-8 * es.eigenvalues[0]);
    if (j) EXPECT_LE(es.eigenvalues[j], es.eigenvalues[j - 1]);
    EXPECT_GE(es.eigenvalues[j], 0.0);
  }
  EXPECT_LT((es.eigenfunctions.gram() - MatrixXd::Identity(5, 5)).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Eigenpairs, SignConventionAndScaling) {
  ClrSeries s = walk_plus_noise(60, 0.4, 3);
  EigenSystem a = eigenpairs(empirical_cov(s), 4);
  EigenSystem b = eigenpairs(empirical_cov(s), 4);
  EXPECT_EQ(a.eigenfunctions.columns(), b.eigenfunctions.columns());
  for (int j = 0; j < 4; ++j) {
    const VectorXd v = a.eigenfunctions.columns().col(j);
    Eigen::Index first = 0;
    while (std::abs(v[first]) < 1e-8 * v.cwiseAbs().maxCoeff()) ++first;
    EXPECT_GT(v[first], 0.0);
  }
  ClrSeries s3(small_grid(), 3.0 * s.rows());
  EigenSystem c = eigenpairs(empirical_cov(s3), 4);
  for (int j = 0; j < 4; ++j) {
    EXPECT_NEAR(c.eigenvalues[j], 9.0 * a.eigenvalues[j], 1e-9 * c.eigenvalues[0]);
    EXPECT_NEAR(std::abs(dot(c.eigenfunctions.columns().col(j), a.eigenfunctions.columns().col(j), small_grid())),
                1.0, 1e-6);
  }
}

TEST(Eigenpairs, RejectsBadCount) {
  LinearMap a = LinearMap::identity(small_grid());
  EXPECT_THROW(eigenpairs(a, 0), DimensionError);
  EXPECT_THROW(eigenpairs(a, small_grid().size() + 1), DimensionError);
  EXPECT_EQ(default_eigen_count(small_grid()), 25);
  EXPECT_EQ(default_eigen_count(Grid(0, 1, 10)), 10);
}

TEST(EstimateAttractor, RecoversRandomWalkDirection) {
  ClrSeries s = walk_plus_noise(1000, 0.3, 11);
  AttractorEstimate est = estimate_attractor(s, 1);
  VectorXd v = fourier(1).columns().col(0);
  double c = std::abs(dot(est.basis.columns().col(0), v, small_grid()));
  EXPECT_LT(std::acos(std::min(1.0, c)), 0.05);
  const MatrixXd& p = est.projector.matrix();
  EXPECT_LT((p * p - p).cwiseAbs().maxCoeff(), 1e-10);
  LinearMap q = est.cointegrating_projector();
  EXPECT_LT((q.matrix() * p).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(EstimateAttractor, RankLimits) {
  ClrSeries s = walk_plus_noise(30, 0.3, 12);
  EXPECT_THROW(estimate_attractor(s, 0), RankError);
  EXPECT_THROW(estimate_attractor(s, 10), RankError);

  // Full rank on a tiny grid gives the identity on the clr space.
  Grid g(0, 1, 5);
  std::mt19937_64 eng(1);
  std::normal_distribution<double> n01(0.0, 1.0);
  MatrixXd rows(40, 5);
  for (int t = 0; t < 40; ++t) {
    VectorXd v(5);
    for (int i = 0; i < 5; ++i) v[i] = n01(eng);
    rows.row(t) = ClrFunction::demeaned(g, v).values().transpose();
  }
  ClrSeries tiny(g, rows);
  AttractorEstimate full = estimate_attractor(tiny, 4);
  VectorXd f = ClrFunction::demeaned(g, (VectorXd(5) << 1, -2, 0.5, 3, 1).finished()).values();
  EXPECT_LT((full.projector.matrix() * f - f).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(EstimateAttractor, EigenvalueRatioShrinksWithT) {
  std::vector<double> medians;
  for (int T : {200, 800, 3200}) {
    std::vector<double> ratios;
    for (int r = 0; r < 15; ++r) {
      ClrSeries s = walk_plus_noise(T, 1.0, 100 + static_cast<std::uint64_t>(r) + 1000u * T, 0.5);
      EigenSystem es = eigenpairs(empirical_cov(s), 2);
      ratios.push_back(es.eigenvalues[1] / es.eigenvalues[0]);
    }
    std::nth_element(ratios.begin(), ratios.begin() + 7, ratios.end());
    medians.push_back(ratios[7]);
  }
  EXPECT_GT(medians[0], medians[1]);
  EXPECT_GT(medians[1], medians[2]);
}

TEST(AttractorToDensitySpace, ZeroAndRoundTrip) {
  const Grid& g = small_grid();
  OrthonormalBasis b = fourier(3);
  auto ds = attractor_to_density_space(b);
  ASSERT_EQ(ds.size(), 3u);
  for (int j = 0; j < 3; ++j) {
    EXPECT_LT((clr(ds[j]).values() - b.columns().col(j)).cwiseAbs().maxCoeff(), 1e-10);
  }
  Density u = clr_inv(ClrFunction::zero(g));
  EXPECT_LT((u.values() - Density::uniform(g).values()).cwiseAbs().maxCoeff(), 1e-14);
}
