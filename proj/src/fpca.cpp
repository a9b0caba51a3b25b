#include "denscoint/fpca.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "denscoint/errors.hpp"

namespace denscoint {

using Eigen::MatrixXd;
using Eigen::VectorXd;

ClrSeries::ClrSeries(Grid grid, MatrixXd rows) : grid_(std::move(grid)), rows_(std::move(rows)) {
  if (rows_.rows() < 2) throw DimensionError("clr series: at least two periods required");
  if (rows_.cols() != grid_.size()) throw DimensionError("clr series: row length does not match the grid");
  if (!rows_.allFinite()) throw DimensionError("clr series: non-finite values");
  VectorXd integrals = rows_ * grid_.weights();
  for (Eigen::Index t = 0; t < rows_.rows(); ++t) {
    double scale = std::max(1.0, rows_.row(t).cwiseAbs().maxCoeff() * grid_.measure());
    if (std::abs(integrals[t]) > 1e-8 * scale) {
      std::ostringstream msg;
      msg << "clr series: row " << t << " integrates to " << integrals[t];
      throw DimensionError(msg.str());
    }
  }
}

ClrSeries ClrSeries::from_densities(const std::vector<Density>& densities) {
  if (densities.empty()) throw DimensionError("clr series: no densities");
  const Grid& grid = densities.front().grid();
  MatrixXd rows(static_cast<Eigen::Index>(densities.size()), grid.size());
  for (std::size_t t = 0; t < densities.size(); ++t) {
    require_same_grid(grid, densities[t].grid(), "clr series");
    rows.row(static_cast<Eigen::Index>(t)) = clr(densities[t]).values().transpose();
  }
  return ClrSeries(grid, std::move(rows));
}

ClrSeries ClrSeries::from_functions(const std::vector<ClrFunction>& functions) {
  if (functions.empty()) throw DimensionError("clr series: no functions");
  const Grid& grid = functions.front().grid();
  MatrixXd rows(static_cast<Eigen::Index>(functions.size()), grid.size());
  for (std::size_t t = 0; t < functions.size(); ++t) {
    require_same_grid(grid, functions[t].grid(), "clr series");
    rows.row(static_cast<Eigen::Index>(t)) = functions[t].values().transpose();
  }
  return ClrSeries(grid, std::move(rows));
}

LinearMap empirical_cov(const ClrSeries& series, bool demean) {
  const Grid& grid = series.grid();
  MatrixXd centered = series.rows();
  if (demean) centered.rowwise() -= centered.colwise().mean();
  const double t = static_cast<double>(series.length());
  MatrixXd c = MatrixXd::Zero(grid.size(), grid.size());
  c.selfadjointView<Eigen::Lower>().rankUpdate(centered.transpose(), 1.0 / t);
  c.triangularView<Eigen::StrictlyUpper>() = c.transpose();
  return LinearMap(grid, c * grid.weights().asDiagonal());
}

int default_eigen_count(const Grid& grid) { return std::min(25, grid.size()); }

EigenSystem eigenpairs(const LinearMap& v, int k) {
  const Grid& grid = v.grid();
  const int n = grid.size();
  if (k < 1 || k > n) throw DimensionError("eigenpairs: k must lie in [1, n]");
  MatrixXd sym = v.isometric();
  sym = 0.5 * (sym + sym.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<MatrixXd> solver(sym);
  if (solver.info() != Eigen::Success) throw NumericalError("eigenpairs: eigen solver failed");

  // Eigen returns ascending order.
  VectorXd values(k);
  MatrixXd functions(n, k);
  const VectorXd inv_sqrt_w = grid.sqrt_weights().cwiseInverse();
  for (int j = 0; j < k; ++j) {
    const int src = n - 1 - j;
    values[j] = std::max(0.0, solver.eigenvalues()[src]);
    VectorXd f = inv_sqrt_w.cwiseProduct(solver.eigenvectors().col(src));
    double cut = 1e-8 * f.cwiseAbs().maxCoeff();
    for (int i = 0; i < n; ++i) {
      if (std::abs(f[i]) > cut) {
        if (f[i] < 0.0) f = -f;
        break;
      }
    }
    functions.col(j) = f;
  }

  const double top = values[0];
  for (int j = 0; j < k; ++j) {
    VectorXd r = v.matrix() * functions.col(j) - values[j] * functions.col(j);
    double residual = norm(r, grid);
    if (residual > 1e-8 * top + 1e-13) {
      std::ostringstream msg;
      msg << "eigenpairs: residual " << residual << " for pair " << j;
      throw NumericalError(msg.str());
    }
  }
  return EigenSystem{std::move(values), OrthonormalBasis(grid, std::move(functions))};
}

LinearMap AttractorEstimate::cointegrating_projector() const {
  return LinearMap::identity(projector.grid()) - projector;
}

AttractorEstimate estimate_attractor(const ClrSeries& series, int r, bool demean) {
  const Grid& grid = series.grid();
  if (r < 1 || r > grid.size()) throw RankError("estimate_attractor: r must lie in [1, n]");
  EigenSystem eig = eigenpairs(empirical_cov(series, demean), std::max(r, default_eigen_count(grid)));
  const double top = eig.eigenvalues[0];
  int rank = 0;
  while (rank < eig.eigenvalues.size() && top > 0.0 && eig.eigenvalues[rank] > 1e-10 * top) ++rank;
  if (r > rank) {
    std::ostringstream msg;
    msg << "estimate_attractor: r = " << r << " exceeds the numerical rank " << rank << " of the covariance";
    throw RankError(msg.str());
  }
  OrthonormalBasis basis(grid, eig.eigenfunctions.columns().leftCols(r));
  LinearMap proj = projector(basis);
  return AttractorEstimate{std::move(eig), std::move(basis), std::move(proj)};
}

std::vector<Density> attractor_to_density_space(const OrthonormalBasis& basis) {
  std::vector<Density> out;
  out.reserve(basis.size());
  for (int j = 0; j < basis.size(); ++j) out.push_back(clr_inv(basis.columns().col(j), basis.grid()));
  return out;
}

}  // namespace denscoint
