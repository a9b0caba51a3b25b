#pragma once

// Discretized Bayes Hilbert space B^2(lambda) for the uniform reference
// measure on a compact interval K = [lower, upper].
//
// A density is stored through its unit-integral representative; its clr image
// lives in the zero-integral subspace of L^2(lambda). Every integral is the
// composite trapezoid rule on the node grid, so the clr demeaning and the
// inner product share one quadrature and the clr map is an exact isometry of
// the discrete spaces.

#include <memory>

#include <Eigen/Dense>

namespace denscoint {

/// Uniform node grid on [lower, upper] carrying trapezoid weights.
///
/// Copies share the node and weight arrays.
class Grid {
 public:
  Grid(double lower, double upper, int n);

  /// K = [-3, 3] with 601 nodes.
  static Grid standard();

  double lower() const { return lower_; }
  double upper() const { return upper_; }
  int size() const { return n_; }
  double step() const { return (upper_ - lower_) / (n_ - 1); }
  /// lambda(K), the total reference mass.
  double measure() const { return upper_ - lower_; }

  const Eigen::VectorXd& nodes() const { return data_->nodes; }
  const Eigen::VectorXd& weights() const { return data_->weights; }
  const Eigen::VectorXd& sqrt_weights() const { return data_->sqrt_weights; }

  bool operator==(const Grid& other) const {
    return n_ == other.n_ && lower_ == other.lower_ && upper_ == other.upper_;
  }
  bool operator!=(const Grid& other) const { return !(*this == other); }

 private:
  struct Data {
    Eigen::VectorXd nodes;
    Eigen::VectorXd weights;
    Eigen::VectorXd sqrt_weights;
  };

  double lower_;
  double upper_;
  int n_;
  std::shared_ptr<const Data> data_;
};

/// Throws DimensionError when the grids differ.
void require_same_grid(const Grid& a, const Grid& b, const char* what);

/// Unit-integral, strictly positive nodal values.
class Density {
 public:
  /// Validates positivity and the unit-integral constraint (1e-10).
  Density(Grid grid, Eigen::VectorXd values);

  static Density uniform(const Grid& grid);

  const Grid& grid() const { return grid_; }
  const Eigen::VectorXd& values() const { return values_; }
  double operator()(int i) const { return values_[i]; }

 private:
  Grid grid_;
  Eigen::VectorXd values_;
};

/// Zero-integral nodal values (an element of the clr space).
class ClrFunction {
 public:
  /// Validates the zero-integral constraint (1e-10, scaled by the sup norm
  /// when that exceeds one).
  ClrFunction(Grid grid, Eigen::VectorXd values);

  static ClrFunction zero(const Grid& grid);
  /// Subtracts the lambda-mean from arbitrary nodal values.
  static ClrFunction demeaned(const Grid& grid, Eigen::VectorXd values);

  const Grid& grid() const { return grid_; }
  const Eigen::VectorXd& values() const { return values_; }
  double operator()(int i) const { return values_[i]; }

 private:
  Grid grid_;
  Eigen::VectorXd values_;
};

// --- quadrature --------------------------------------------------------------

/// Trapezoid approximation of the integral of `values` against lambda.
double integrate(const Eigen::Ref<const Eigen::VectorXd>& values, const Grid& grid);
double integrate(const ClrFunction& g);

/// (1 / lambda(K)) times the integral.
double lambda_mean(const Eigen::Ref<const Eigen::VectorXd>& values, const Grid& grid);

/// Quadrature inner product of raw nodal vectors.
double dot(const Eigen::Ref<const Eigen::VectorXd>& a,
           const Eigen::Ref<const Eigen::VectorXd>& b, const Grid& grid);
double norm(const Eigen::Ref<const Eigen::VectorXd>& a, const Grid& grid);

// --- density algebra -----------------------------------------------------------

Density normalize(const Eigen::Ref<const Eigen::VectorXd>& raw, const Grid& grid);

ClrFunction clr(const Density& f);

/// exp of the (demeaned) input, normalized. Values are clipped at +-700 and
/// OverflowError is raised only when that clipping moves the result by more
/// than 1e-8 in sup norm, or when the dynamic range underflows.
Density clr_inv(const ClrFunction& g);
/// Same map on raw nodal values; demeans first.
Density clr_inv(const Eigen::Ref<const Eigen::VectorXd>& values, const Grid& grid);

/// f (+) g
Density perturb(const Density& f, const Density& g);
/// f (-) g
Density subtract(const Density& f, const Density& g);
/// a (.) f
Density power(double a, const Density& f);

double inner_product(const Density& f, const Density& g);

}  // namespace denscoint
