#pragma once

// Functional principal components of a series of clr images and the
// eigenfunction-based estimate of the attractor space.

#include <vector>

#include <Eigen/Dense>

#include "denscoint/grid_space.hpp"
#include "denscoint/operators.hpp"

namespace denscoint {

/// T clr images on one grid, one per row.
class ClrSeries {
 public:
  /// Validates T >= 2 and that each row integrates to zero within 1e-8
  /// (scaled by the row's sup norm when that exceeds one).
  ClrSeries(Grid grid, Eigen::MatrixXd rows);

  static ClrSeries from_densities(const std::vector<Density>& densities);
  static ClrSeries from_functions(const std::vector<ClrFunction>& functions);

  const Grid& grid() const { return grid_; }
  const Eigen::MatrixXd& rows() const { return rows_; }
  int length() const { return static_cast<int>(rows_.rows()); }

  Eigen::VectorXd mean() const { return rows_.colwise().mean().transpose(); }
  ClrFunction row(int t) const { return ClrFunction(grid_, rows_.row(t).transpose()); }

 private:
  Grid grid_;
  Eigen::MatrixXd rows_;
};

struct EigenSystem {
  /// Decreasing and nonnegative.
  Eigen::VectorXd eigenvalues;
  OrthonormalBasis eigenfunctions;
};

/// T^{-1} sum (x_t - xbar) (x) (x_t - xbar) as a map on nodal values.
/// With demean = false the uncentered second-moment operator is returned.
LinearMap empirical_cov(const ClrSeries& series, bool demean = true);

/// Default number of computed eigenpairs: min(25, n).
int default_eigen_count(const Grid& grid);

/// Top-k eigenpairs of a map that is self-adjoint under the quadrature inner
/// product. Eigenfunctions are W-orthonormal with their first non-negligible
/// coordinate positive.
EigenSystem eigenpairs(const LinearMap& v, int k);

struct AttractorEstimate {
  EigenSystem eigen;
  OrthonormalBasis basis;  // leading r eigenfunctions
  LinearMap projector;     // orthogonal projector onto their span

  /// I - projector, the projector onto the estimated cointegrating space.
  LinearMap cointegrating_projector() const;
};

/// Leading-r eigenfunction span of the empirical covariance. Throws RankError
/// when r exceeds the numerical rank of the covariance.
AttractorEstimate estimate_attractor(const ClrSeries& series, int r, bool demean = true);

/// clr^{-1} of each basis element.
std::vector<Density> attractor_to_density_space(const OrthonormalBasis& basis);

}  // namespace denscoint
