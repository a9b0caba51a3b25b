#pragma once

// Operators on the discretized clr space.
//
// A map is stored as a matrix acting on nodal values. The space carries the
// quadrature inner product <f, g> = f' W g with W = diag(trapezoid weights), so
// orthogonality, adjoints and operator norms are all taken with respect to W.
// Internally the "isometric" form D A D^{-1}, D = W^{1/2}, turns these into
// ordinary Euclidean notions.

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "denscoint/errors.hpp"
#include "denscoint/grid_space.hpp"

namespace denscoint {

template <typename Scalar>
class BasicLinearMap {
 public:
  using MatrixType = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  BasicLinearMap(Grid grid, MatrixType matrix) : grid_(std::move(grid)), matrix_(std::move(matrix)) {
    if (matrix_.rows() != grid_.size() || matrix_.cols() != grid_.size()) {
      throw DimensionError("linear map: matrix does not match the grid");
    }
  }

  static BasicLinearMap identity(const Grid& grid) {
    return BasicLinearMap(grid, MatrixType::Identity(grid.size(), grid.size()));
  }
  static BasicLinearMap zero(const Grid& grid) {
    return BasicLinearMap(grid, MatrixType::Zero(grid.size(), grid.size()));
  }

  const Grid& grid() const { return grid_; }
  const MatrixType& matrix() const { return matrix_; }

  /// D A D^{-1}: the matrix of this map in a W-orthonormal coordinate system.
  MatrixType isometric() const {
    const auto& d = grid_.sqrt_weights();
    return d.asDiagonal() * matrix_ * d.cwiseInverse().asDiagonal();
  }
  static BasicLinearMap from_isometric(const Grid& grid, const MatrixType& iso) {
    const auto& d = grid.sqrt_weights();
    return BasicLinearMap(grid, d.cwiseInverse().asDiagonal() * iso * d.asDiagonal());
  }

  BasicLinearMap& operator+=(const BasicLinearMap& rhs) {
    require_same_grid(grid_, rhs.grid_, "linear map sum");
    matrix_ += rhs.matrix_;
    return *this;
  }
  BasicLinearMap& operator-=(const BasicLinearMap& rhs) {
    require_same_grid(grid_, rhs.grid_, "linear map difference");
    matrix_ -= rhs.matrix_;
    return *this;
  }
  BasicLinearMap& operator*=(Scalar s) {
    matrix_ *= s;
    return *this;
  }

  friend BasicLinearMap operator+(BasicLinearMap a, const BasicLinearMap& b) { return a += b; }
  friend BasicLinearMap operator-(BasicLinearMap a, const BasicLinearMap& b) { return a -= b; }
  friend BasicLinearMap operator*(Scalar s, BasicLinearMap a) { return a *= s; }
  /// Composition a o b.
  friend BasicLinearMap operator*(const BasicLinearMap& a, const BasicLinearMap& b) {
    require_same_grid(a.grid_, b.grid_, "linear map composition");
    return BasicLinearMap(a.grid_, a.matrix_ * b.matrix_);
  }

 private:
  Grid grid_;
  MatrixType matrix_;
};

using LinearMap = BasicLinearMap<double>;
using ComplexLinearMap = BasicLinearMap<std::complex<double>>;

/// Operator norm induced by the quadrature inner product.
template <typename Scalar>
double operator_norm(const BasicLinearMap<Scalar>& a) {
  Eigen::JacobiSVD<typename BasicLinearMap<Scalar>::MatrixType> svd(a.isometric());
  return svd.singularValues()(0);
}

/// Largest nodal drift of the integral of A x over zero-integral x, relative to
/// the operator norm. Zero (up to rounding) when A maps the clr space into itself.
double clr_space_leakage(const LinearMap& a);

/// A W-orthonormal family of nodal functions, stored as matrix columns.
class OrthonormalBasis {
 public:
  /// Validates the Gram matrix against the identity (1e-8).
  OrthonormalBasis(Grid grid, Eigen::MatrixXd columns);

  const Grid& grid() const { return grid_; }
  const Eigen::MatrixXd& columns() const { return columns_; }
  int size() const { return static_cast<int>(columns_.cols()); }
  ClrFunction function(int j) const;

  Eigen::MatrixXd gram() const;

 private:
  Grid grid_;
  Eigen::MatrixXd columns_;
};

// --- construction helpers ------------------------------------------------------

/// <., u> v
LinearMap rank_one(const Eigen::Ref<const Eigen::VectorXd>& u, const Eigen::Ref<const Eigen::VectorXd>& v,
                   const Grid& grid);
/// sum_j coefficients[j] <., e_j> e_j
LinearMap spectral_map(const OrthonormalBasis& basis, const Eigen::Ref<const Eigen::VectorXd>& coefficients);
/// Orthogonal projector onto the span of the basis.
LinearMap projector(const OrthonormalBasis& basis);

// --- operations ----------------------------------------------------------------

/// A g; the output is re-demeaned when its integral drifts past 1e-12.
ClrFunction apply(const LinearMap& a, const ClrFunction& g);

/// W^{-1} A^H W, so that <A f, g> = <f, A* g> under the quadrature inner product.
template <typename Scalar>
BasicLinearMap<Scalar> adjoint(const BasicLinearMap<Scalar>& a) {
  const auto& w = a.grid().weights();
  return BasicLinearMap<Scalar>(a.grid(), w.cwiseInverse().asDiagonal() * a.matrix().adjoint() * w.asDiagonal());
}

OrthonormalBasis gram_schmidt(const std::vector<ClrFunction>& seed);

/// First m non-constant trigonometric functions on K, ordered
/// cos(2 pi s), sin(2 pi s), cos(4 pi s), ... with s = (x - lower) / lambda(K).
OrthonormalBasis fourier_basis_clr(const Grid& grid, int m);

// --- operator pencils ----------------------------------------------------------

/// A(z) = I - z A_1 - ... - z^p A_p
class OperatorPencil {
 public:
  explicit OperatorPencil(std::vector<LinearMap> coefficients);

  int order() const { return static_cast<int>(coefficients_.size()); }
  const Grid& grid() const { return coefficients_.front().grid(); }
  const std::vector<LinearMap>& coefficients() const { return coefficients_; }

  /// A(1)
  LinearMap at_one() const;
  /// A'(1) = -sum_k k A_k
  LinearMap derivative_at_one() const;

 private:
  std::vector<LinearMap> coefficients_;
};

ComplexLinearMap pencil_eval(const OperatorPencil& pencil, std::complex<double> z);

struct StationarityCheck {
  bool stationary;
  /// Largest-modulus eigenvalue of the companion operator.
  std::complex<double> witness;
};

/// True when every spectral point of the pencil lies outside the closed disk
/// of the given radius, i.e. the companion operator has spectral radius below
/// 1 / radius.
StationarityCheck spectrum_check_stationary(const OperatorPencil& pencil, double radius = 1.0 + 1e-6);

/// Eigenvalues of the pn x pn companion matrix.
Eigen::VectorXcd companion_eigenvalues(const OperatorPencil& pencil);

struct PencilOptions {
  /// Singular values below this multiple of the largest count as zero.
  double rank_tolerance = 1e-8;
};

struct I1Check {
  int kernel_dim;
  bool satisfied;
  /// Extreme singular values of (I - P) A'(1) restricted to ker A(1).
  double smallest_singular;
  double largest_singular;
};

I1Check i1_condition_check(const OperatorPencil& pencil, const PencilOptions& options = {});

/// N_{-1} = lim (1 - z) A(z)^{-1}, computed as
/// -[(I - P) A'(1)|ker A(1)]^{-1} (I - P) with P the orthogonal projector on ran A(1).
LinearMap residue_n1(const OperatorPencil& pencil, const PencilOptions& options = {});

/// Same residue with a caller-supplied (possibly oblique) projection onto ran A(1).
LinearMap residue_n1(const OperatorPencil& pencil, const LinearMap& range_projection,
                     const PencilOptions& options = {});

/// Order of the pole of A(z)^{-1} at z = 1, from the growth of ||A(z)^{-1}||
/// along z = 1 - 10^{-k}, k = 2..6.
int pole_order_estimate(const OperatorPencil& pencil, const PencilOptions& options = {});

}  // namespace denscoint
