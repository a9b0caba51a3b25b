#pragma once

// Weighted local-likelihood estimation of a log density from one cross
// section with design weights. At an evaluation point x the local model is
// Q(u) = a0 + a1 u + ... for u = X - x and
//
//   L(a) = sum_i w_i W((X_i - x)/h) Q(X_i - x) - n int_K W((u - x)/h) exp(Q(u - x)) du
//
// with the tricube kernel W. The fitted a0 estimates log f(x).

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "denscoint/grid_space.hpp"

namespace denscoint {

/// Observations of one period with weights normalized to sum to n. The
/// observations are kept sorted.
class CrossSection {
 public:
  /// Empty `weights` means unit weights. Throws FormatError on mismatched
  /// lengths, non-finite values, non-positive weights or an empty sample.
  CrossSection(int period, Eigen::VectorXd observations, Eigen::VectorXd weights = {});

  int period() const { return period_; }
  int size() const { return static_cast<int>(x_.size()); }
  const Eigen::VectorXd& observations() const { return x_; }
  const Eigen::VectorXd& weights() const { return w_; }

 private:
  int period_;
  Eigen::VectorXd x_;
  Eigen::VectorXd w_;
};

/// 70/81 (1 - |u|^3)^3 on |u| < 1.
double tricube(double u);

struct LogDensityOptions {
  int degree = 1;
  int mesh_points = 101;
  int quadrature_points = 65;
  int max_iterations = 100;
  double gradient_tolerance = 1e-8;

  void validate() const;
};

struct LocalObjective {
  double value;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;
};

/// Objective with analytic derivatives in the coefficients. The integral runs
/// over [x - h, x + h] intersected with the grid's interval.
LocalObjective local_loglik(const CrossSection& cs, double x, double h, const Eigen::VectorXd& alpha,
                            const Grid& support, const LogDensityOptions& options = {});

struct LocalFit {
  double x;
  Eigen::VectorXd alpha;
  bool converged;
  int iterations;
  double gradient_norm;
  /// Influence of an observation at x on its own fitted value,
  /// W(0) [(-H)^{-1}]_{00}.
  double self_influence;

  double alpha0() const { return alpha[0]; }
  double alpha1() const { return alpha.size() > 1 ? alpha[1] : 0.0; }
};

/// Newton maximization with step halving. Throws EmptyWindow when no
/// observation lies in (x - h, x + h) and NotConverged when the iteration
/// limit is reached.
LocalFit fit_local(const CrossSection& cs, double x, double h, const Grid& support,
                   const LogDensityOptions& options = {}, const std::optional<Eigen::VectorXd>& start = std::nullopt);

struct LogDensityEstimate {
  ClrFunction clr;
  Density density;
  Eigen::VectorXd mesh;
  /// Fitted log-density values on the mesh (not normalized).
  Eigen::VectorXd mesh_log_density;
  std::vector<LocalFit> fits;
  double bandwidth;
};

/// Fits on an equally spaced mesh over the grid, interpolates by monotone
/// cubic Hermite interpolation onto the grid nodes, then normalizes.
LogDensityEstimate estimate_logdensity(const CrossSection& cs, const Grid& grid, double h,
                                       const LogDensityOptions& options = {});

/// Fritsch-Carlson monotone cubic interpolation; queries outside the knots
/// take the end values.
Eigen::VectorXd pchip_interpolate(const Eigen::VectorXd& knots, const Eigen::VectorXd& values,
                                  const Eigen::VectorXd& queries);

/// Weighted percentile (p in [0, 100]) on the plotting positions
/// (c_i - w_i / 2) / sum w of the sorted sample, linearly interpolated.
double weighted_percentile(const Eigen::VectorXd& sorted_x, const Eigen::VectorXd& weights, double p);
double weighted_percentile(const CrossSection& cs, double p);

/// [q99 - q1] n^{-1/5}.
double default_bandwidth(const CrossSection& cs);

/// -2 sum w_i log f(X_i) + nu log n with nu the trace of the local
/// influence, n int infl(x) f(x) dx over the mesh.
struct GbicTerms {
  double loglik;
  double degrees_of_freedom;
  double gbic;
};
GbicTerms gbic(const CrossSection& cs, const LogDensityEstimate& estimate);

struct BandwidthSelection {
  double bandwidth;
  double reference;  // b
  /// Number of times the search range was scaled up by 1.25.
  int widenings = 0;
  std::vector<double> candidates;
  /// NaN where the estimate failed.
  std::vector<double> criteria;
};

/// GBIC minimizer over 11 equally spaced bandwidths in [0.75 b, 1.25 b].
BandwidthSelection select_bandwidth_details(const CrossSection& cs, const Grid& grid,
                                            const LogDensityOptions& options = {});
double select_bandwidth(const CrossSection& cs, const Grid& grid, const LogDensityOptions& options = {});

/// select_bandwidth_details, except that when every candidate fails the range
/// is rescaled to [0.75, 1.25] x 1.25^k b for k = 1..max_widenings until one
/// succeeds. Needed when a period is much more concentrated than the grid.
BandwidthSelection select_bandwidth_widening(const CrossSection& cs, const Grid& grid,
                                             const LogDensityOptions& options = {}, int max_widenings = 6);

}  // namespace denscoint
