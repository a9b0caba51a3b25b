#include "denscoint/operators.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace denscoint {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kGramTol = 1e-8;
constexpr double kPivotTol = 1e-10;
constexpr double kApplyDriftTol = 1e-12;

// SVD split of a square matrix into kernel, range and cokernel bases.
struct KernelSplit {
  MatrixXd kernel;    // right singular vectors of the zero singular values
  MatrixXd range;     // left singular vectors of the nonzero singular values
  MatrixXd cokernel;  // orthogonal complement of the range
  double largest_singular = 0.0;
};

KernelSplit split_kernel(const MatrixXd& a, double tolerance) {
  Eigen::BDCSVD<MatrixXd> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  if (svd.info() != Eigen::Success) throw NumericalError("SVD failed");
  const VectorXd& s = svd.singularValues();
  const Eigen::Index n = a.rows();
  double smax = s(0);
  Eigen::Index rank = 0;
  while (rank < n && smax > 0.0 && s(rank) > tolerance * smax) ++rank;
  KernelSplit out;
  out.kernel = svd.matrixV().rightCols(n - rank);
  out.range = svd.matrixU().leftCols(rank);
  out.cokernel = svd.matrixU().rightCols(n - rank);
  out.largest_singular = smax;
  return out;
}

MatrixXd iso(const MatrixXd& m, const Grid& grid) { return LinearMap(grid, m).isometric(); }

// Solves for the residue given an isometric complement projection I - P.
LinearMap residue_from_complement(const OperatorPencil& pencil, const KernelSplit& split,
                                  const MatrixXd& complement_iso, double tolerance) {
  const Grid& grid = pencil.grid();
  const Eigen::Index r = split.kernel.cols();

  Eigen::BDCSVD<MatrixXd> svd(complement_iso, Eigen::ComputeFullU);
  const VectorXd& s = svd.singularValues();
  Eigen::Index rank = 0;
  while (rank < s.size() && s(0) > 0.0 && s(rank) > tolerance * s(0)) ++rank;
  if (rank != r) {
    std::ostringstream msg;
    msg << "residue: projection complement has rank " << rank << ", kernel has dimension " << r;
    throw DimensionError(msg.str());
  }
  MatrixXd basis = svd.matrixU().leftCols(r);

  MatrixXd derivative = pencil.derivative_at_one().isometric();
  MatrixXd restricted = basis.transpose() * complement_iso * derivative * split.kernel;
  Eigen::JacobiSVD<MatrixXd> check(restricted);
  const VectorXd& rs = check.singularValues();
  double scale = std::max(1.0, split.largest_singular);
  if (rs(0) <= tolerance * scale || rs(r - 1) <= tolerance * rs(0)) {
    throw NotI1("residue: (I - P) A'(1) restricted to ker A(1) is not invertible");
  }
  MatrixXd residue_iso =
      -split.kernel * restricted.partialPivLu().solve(basis.transpose() * complement_iso);
  return LinearMap::from_isometric(grid, residue_iso);
}

}  // namespace

double clr_space_leakage(const LinearMap& a) {
  const VectorXd& d = a.grid().sqrt_weights();
  MatrixXd a_iso = a.isometric();
  VectorXd row = a_iso.transpose() * d;
  row -= d * (d.dot(row) / d.squaredNorm());
  double scale = std::max(a_iso.norm(), 1e-300);
  return row.norm() / (d.norm() * scale);
}

OrthonormalBasis::OrthonormalBasis(Grid grid, Eigen::MatrixXd columns)
    : grid_(std::move(grid)), columns_(std::move(columns)) {
  if (columns_.rows() != grid_.size()) throw DimensionError("basis: column length does not match the grid");
  MatrixXd g = gram();
  double err = (g - MatrixXd::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff();
  if (columns_.cols() > 0 && err > kGramTol) {
    std::ostringstream msg;
    msg << "basis: Gram matrix deviates from identity by " << err;
    throw DegenerateBasis(msg.str());
  }
}

ClrFunction OrthonormalBasis::function(int j) const { return ClrFunction(grid_, columns_.col(j)); }

MatrixXd OrthonormalBasis::gram() const { return columns_.transpose() * grid_.weights().asDiagonal() * columns_; }

LinearMap rank_one(const Eigen::Ref<const VectorXd>& u, const Eigen::Ref<const VectorXd>& v, const Grid& grid) {
  if (u.size() != grid.size() || v.size() != grid.size()) throw DimensionError("rank_one: length mismatch");
  VectorXd wu = u.cwiseProduct(grid.weights());
  return LinearMap(grid, v * wu.transpose());
}

LinearMap spectral_map(const OrthonormalBasis& basis, const Eigen::Ref<const VectorXd>& coefficients) {
  if (coefficients.size() != basis.size()) throw DimensionError("spectral_map: coefficient count mismatch");
  const MatrixXd& e = basis.columns();
  MatrixXd m = e * coefficients.asDiagonal() * e.transpose() * basis.grid().weights().asDiagonal();
  return LinearMap(basis.grid(), std::move(m));
}

LinearMap projector(const OrthonormalBasis& basis) {
  return spectral_map(basis, VectorXd::Ones(basis.size()));
}

ClrFunction apply(const LinearMap& a, const ClrFunction& g) {
  require_same_grid(a.grid(), g.grid(), "apply");
  VectorXd out = a.matrix() * g.values();
  if (std::abs(integrate(out, a.grid())) > kApplyDriftTol) {
    out.array() -= lambda_mean(out, a.grid());
  }
  return ClrFunction(a.grid(), std::move(out));
}

OrthonormalBasis gram_schmidt(const std::vector<ClrFunction>& seed) {
  if (seed.empty()) throw DegenerateBasis("gram_schmidt: empty seed");
  const Grid& grid = seed.front().grid();
  MatrixXd q(grid.size(), static_cast<Eigen::Index>(seed.size()));
  const VectorXd& w = grid.weights();
  for (std::size_t j = 0; j < seed.size(); ++j) {
    require_same_grid(grid, seed[j].grid(), "gram_schmidt");
    VectorXd v = seed[j].values();
    double original = norm(v, grid);
    // Two passes of modified Gram-Schmidt keep the family orthonormal to
    // rounding even for nearly dependent seeds.
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t k = 0; k < j; ++k) {
        v -= q.col(k) * (q.col(k).cwiseProduct(w).dot(v));
      }
    }
    double pivot = norm(v, grid);
    if (!(original > 0.0) || pivot < kPivotTol * original) {
      std::ostringstream msg;
      msg << "gram_schmidt: seed " << j << " is numerically dependent on its predecessors";
      throw DegenerateBasis(msg.str());
    }
    q.col(j) = v / pivot;
  }
  return OrthonormalBasis(grid, std::move(q));
}

OrthonormalBasis fourier_basis_clr(const Grid& grid, int m) {
  if (m < 1) throw DimensionError("fourier_basis_clr: m must be positive");
  if (m > grid.size() / 2) throw DimensionError("fourier_basis_clr: m exceeds the Nyquist limit of the grid");
  const double length = grid.measure();
  const double amp = std::sqrt(2.0 / length);
  MatrixXd cols(grid.size(), m);
  for (int j = 0; j < m; ++j) {
    int freq = j / 2 + 1;
    bool cosine = (j % 2 == 0);
    for (int i = 0; i < grid.size(); ++i) {
      double s = (grid.nodes()[i] - grid.lower()) / length;
      double arg = 2.0 * std::numbers::pi * freq * s;
      cols(i, j) = amp * (cosine ? std::cos(arg) : std::sin(arg));
    }
  }
  return OrthonormalBasis(grid, std::move(cols));
}

OperatorPencil::OperatorPencil(std::vector<LinearMap> coefficients) : coefficients_(std::move(coefficients)) {
  if (coefficients_.empty()) throw DimensionError("pencil: order must be positive");
  for (const auto& c : coefficients_) require_same_grid(coefficients_.front().grid(), c.grid(), "pencil");
}

LinearMap OperatorPencil::at_one() const {
  LinearMap out = LinearMap::identity(grid());
  for (const auto& c : coefficients_) out -= c;
  return out;
}

LinearMap OperatorPencil::derivative_at_one() const {
  LinearMap out = LinearMap::zero(grid());
  for (std::size_t k = 0; k < coefficients_.size(); ++k) {
    out -= static_cast<double>(k + 1) * coefficients_[k];
  }
  return out;
}

ComplexLinearMap pencil_eval(const OperatorPencil& pencil, std::complex<double> z) {
  const Grid& grid = pencil.grid();
  ComplexLinearMap::MatrixType m = ComplexLinearMap::MatrixType::Identity(grid.size(), grid.size());
  std::complex<double> zk = 1.0;
  for (const auto& c : pencil.coefficients()) {
    zk *= z;
    m -= zk * c.matrix().cast<std::complex<double>>();
  }
  return ComplexLinearMap(grid, std::move(m));
}

Eigen::VectorXcd companion_eigenvalues(const OperatorPencil& pencil) {
  const Eigen::Index n = pencil.grid().size();
  const Eigen::Index p = pencil.order();
  MatrixXd companion = MatrixXd::Zero(n * p, n * p);
  for (Eigen::Index k = 0; k < p; ++k) {
    companion.block(0, k * n, n, n) = pencil.coefficients()[k].matrix();
  }
  if (p > 1) companion.block(n, 0, n * (p - 1), n * (p - 1)).setIdentity();
  Eigen::EigenSolver<MatrixXd> solver(companion, false);
  if (solver.info() != Eigen::Success) throw NumericalError("companion eigenvalue solver failed");
  return solver.eigenvalues();
}

StationarityCheck spectrum_check_stationary(const OperatorPencil& pencil, double radius) {
  if (!(radius > 1.0)) throw ConfigError("spectrum_check_stationary: radius must exceed 1");
  Eigen::VectorXcd mu = companion_eigenvalues(pencil);
  Eigen::Index arg = 0;
  mu.cwiseAbs().maxCoeff(&arg);
  StationarityCheck out{false, mu(arg)};
  out.stationary = std::abs(out.witness) < 1.0 / radius;
  return out;
}

I1Check i1_condition_check(const OperatorPencil& pencil, const PencilOptions& options) {
  const Grid& grid = pencil.grid();
  KernelSplit split = split_kernel(pencil.at_one().isometric(), options.rank_tolerance);
  const auto r = static_cast<int>(split.kernel.cols());
  if (r == 0) throw NotSingular("i1_condition_check: A(1) is numerically invertible");
  MatrixXd derivative = iso(pencil.derivative_at_one().matrix(), grid);
  MatrixXd restricted = split.cokernel.transpose() * derivative * split.kernel;
  Eigen::JacobiSVD<MatrixXd> svd(restricted);
  const VectorXd& s = svd.singularValues();
  I1Check out{r, false, s(r - 1), s(0)};
  double scale = std::max(1.0, split.largest_singular);
  out.satisfied = s(0) > options.rank_tolerance * scale && s(r - 1) > options.rank_tolerance * s(0);
  return out;
}

LinearMap residue_n1(const OperatorPencil& pencil, const PencilOptions& options) {
  KernelSplit split = split_kernel(pencil.at_one().isometric(), options.rank_tolerance);
  if (split.kernel.cols() == 0) throw NotI1("residue_n1: A(1) is invertible, no pole at 1");
  MatrixXd complement = split.cokernel * split.cokernel.transpose();
  return residue_from_complement(pencil, split, complement, options.rank_tolerance);
}

LinearMap residue_n1(const OperatorPencil& pencil, const LinearMap& range_projection, const PencilOptions& options) {
  require_same_grid(pencil.grid(), range_projection.grid(), "residue_n1");
  KernelSplit split = split_kernel(pencil.at_one().isometric(), options.rank_tolerance);
  if (split.kernel.cols() == 0) throw NotI1("residue_n1: A(1) is invertible, no pole at 1");
  MatrixXd p = range_projection.isometric();
  const Eigen::Index n = p.rows();
  if ((p * p - p).norm() > 1e-8 * std::max(1.0, p.norm())) {
    throw ConfigError("residue_n1: supplied map is not idempotent");
  }
  if ((p * split.range - split.range).norm() > 1e-8 * std::max(1.0, p.norm())) {
    throw ConfigError("residue_n1: supplied projection does not fix ran A(1)");
  }
  MatrixXd complement = MatrixXd::Identity(n, n) - p;
  return residue_from_complement(pencil, split, complement, options.rank_tolerance);
}

int pole_order_estimate(const OperatorPencil& pencil, const PencilOptions& options) {
  KernelSplit split = split_kernel(pencil.at_one().isometric(), options.rank_tolerance);
  if (split.kernel.cols() == 0) throw NotSingular("pole_order_estimate: 1 is not a spectral point");

  // log ||A(z)^{-1}|| against log 1/(1 - z) along z = 1 - 10^{-k}.
  Eigen::VectorXd xs(5), ys(5);
  for (int k = 2; k <= 6; ++k) {
    double z = 1.0 - std::pow(10.0, -k);
    MatrixXd a = LinearMap::identity(pencil.grid()).matrix();
    double zk = 1.0;
    for (const auto& c : pencil.coefficients()) {
      zk *= z;
      a -= zk * c.matrix();
    }
    Eigen::BDCSVD<MatrixXd> svd(iso(a, pencil.grid()));
    double smin = svd.singularValues().tail(1)(0);
    if (!(smin > 0.0)) throw Indeterminate("pole_order_estimate: A(z) singular near 1");
    xs(k - 2) = k * std::log(10.0);
    ys(k - 2) = -std::log(smin);
  }
  double xm = xs.mean(), ym = ys.mean();
  double slope = (xs.array() - xm).matrix().dot((ys.array() - ym).matrix()) / (xs.array() - xm).square().sum();
  double order = std::round(slope);
  if (std::abs(slope - order) > 0.2 || order < 1.0) {
    std::ostringstream msg;
    msg << "pole_order_estimate: growth exponent " << slope << " is not close to a positive integer";
    throw Indeterminate(msg.str());
  }
  return static_cast<int>(order);
}

}  // namespace denscoint
