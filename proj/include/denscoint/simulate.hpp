#pragma once

// Seedable simulation of density-valued autoregressive and I(1) processes.
//
// Innovations follow the smooth construction eps = clr^{-1}(scale * P_m Bbar):
// a standard Brownian bridge is mapped affinely onto K, demeaned, and projected
// onto zero-integral polynomials of degree at most m.

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "denscoint/grid_space.hpp"
#include "denscoint/operators.hpp"
#include "denscoint/random.hpp"

namespace denscoint {

struct InnovationConfig {
  Grid grid = Grid::standard();
  double scale = 0.3;
  int poly_order = 10;
  int bridge_steps = 1024;

  void validate() const;
};

/// Standard Brownian bridge on the uniform grid r_i = i / steps, i = 0..steps.
Eigen::VectorXd brownian_bridge(int steps, std::mt19937_64& engine);
Eigen::VectorXd brownian_bridge(int steps, RngSeed seed, std::uint64_t substream = 0);

/// Maps a bridge path on [0, 1] onto K by linear interpolation and removes
/// its lambda-mean.
ClrFunction rescale_demean_bridge(const Eigen::Ref<const Eigen::VectorXd>& bridge, const Grid& grid);

/// Orthonormal basis of zero-integral polynomials of degree 1..m on the grid
/// (demeaned Legendre polynomials, re-orthonormalized under the quadrature).
OrthonormalBasis polynomial_basis(const Grid& grid, int m);

/// Orthogonal projection onto zero-integral polynomials of degree <= m.
ClrFunction poly_project(const ClrFunction& g, int m);

/// Reusable innovation generator; caches the polynomial basis.
class InnovationSampler {
 public:
  explicit InnovationSampler(InnovationConfig config);

  const InnovationConfig& config() const { return config_; }
  const OrthonormalBasis& basis() const { return basis_; }

  /// clr image of the innovation for (seed, substream).
  Eigen::VectorXd draw_clr(RngSeed seed, std::uint64_t substream) const;
  Density draw(RngSeed seed, std::uint64_t substream) const;

 private:
  InnovationConfig config_;
  OrthonormalBasis basis_;
};

Density draw_innovation(const InnovationConfig& config, RngSeed seed, std::uint64_t substream = 0);

struct ARConfig {
  /// A_1..A_p in clr coordinates.
  std::vector<LinearMap> coefficients;
  /// f_0, f_{-1}, ..., f_{-p+1}.
  std::vector<Density> initial;
  /// Optional level c: the recursion runs on f_t (-) c, as in
  /// (f_t (-) c) = A_1 (f_{t-1} (-) c) (+) ... (+) eps_t.
  std::optional<Density> center;
  InnovationConfig innovation;
  int horizon = 1;

  void validate() const;
};

/// f_1, ..., f_T. Innovation t uses substream t of the seed.
std::vector<Density> simulate_arp(const ARConfig& config, RngSeed seed);

/// Same recursion, returning the clr images as rows of a T x n matrix.
Eigen::MatrixXd simulate_arp_clr(const ARConfig& config, RngSeed seed);

/// MA coefficients N_0, N_1, ... of Delta f_t = sum_k N_k eps_{t-k}.
///
/// The first `coefficients.size()` lags are explicit; when `geometric_decay` is
/// set, lags beyond the last explicit one continue as decay^j times the last.
struct MaSpec {
  std::vector<LinearMap> coefficients;
  std::optional<double> geometric_decay;
  /// Truncation lag K_max; by default the smallest K with
  /// sum_{k>K} k ||N_k|| below 1e-8 of sum_k k ||N_k||.
  std::optional<int> max_lag;
};

/// Materialized N_0..N_{K_max}; throws ConfigError for non-summable specs.
std::vector<LinearMap> ma_coefficients(const MaSpec& spec);

/// f_1..f_T built from the Beveridge-Nelson form
/// f_t = (f_0 (-) nu_0) (+) N(1) xi_t (+) nu_t with nu_t = sum_k Ncheck_k eps_{t-k},
/// Ncheck_k = -sum_{j>k} N_j.
std::vector<Density> simulate_i1_ma(const MaSpec& spec, const Density& f0, const InnovationConfig& innovation,
                                    int horizon, RngSeed seed);

/// The AR(1) example on K = [-3, 3]: Psi = sum_j 2^{1-j} <., e_j> e_j where
/// (e_j) is Gram-Schmidt applied to (clr Cauchy(0, 0.25), u_2, u_3, ...).
struct HalvingExample {
  Density center;           // truncated standard normal g
  Density cauchy;           // e_1 before orthonormalization
  OrthonormalBasis basis;   // clr images of e_1, e_2, ...
  Eigen::VectorXd lambdas;  // 2^{1-j}
  LinearMap psi;            // clr-coordinate matrix of Psi
};

HalvingExample halving_example(const Grid& grid = Grid::standard(), int basis_size = 20);

/// f_0 = g, centered at g, innovation scale 0.3.
ARConfig halving_ar1_config(const HalvingExample& example, int horizon, int poly_order = 10);

Density truncated_normal(const Grid& grid, double mean = 0.0, double sd = 1.0);

}  // namespace denscoint
