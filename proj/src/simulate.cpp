#include "denscoint/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "denscoint/errors.hpp"

namespace denscoint {

using Eigen::MatrixXd;
using Eigen::VectorXd;

void InnovationConfig::validate() const {
  if (!(scale >= 0.0) || !std::isfinite(scale)) throw ConfigError("innovation: scale must be nonnegative");
  if (poly_order < 1 || poly_order > 20) throw ConfigError("innovation: polynomial order must lie in [1, 20]");
  if (bridge_steps < 2) throw ConfigError("innovation: at least 2 bridge steps required");
}

VectorXd brownian_bridge(int steps, std::mt19937_64& engine) {
  if (steps < 2) throw ConfigError("brownian_bridge: at least 2 steps required");
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(steps)));
  VectorXd w(steps + 1);
  w[0] = 0.0;
  for (int i = 1; i <= steps; ++i) w[i] = w[i - 1] + normal(engine);
  const double end = w[steps];
  for (int i = 0; i <= steps; ++i) w[i] -= (static_cast<double>(i) / steps) * end;
  w[steps] = 0.0;
  return w;
}

VectorXd brownian_bridge(int steps, RngSeed seed, std::uint64_t substream) {
  auto engine = make_engine(seed, substream);
  return brownian_bridge(steps, engine);
}

ClrFunction rescale_demean_bridge(const Eigen::Ref<const VectorXd>& bridge, const Grid& grid) {
  const auto steps = static_cast<int>(bridge.size()) - 1;
  if (steps < 1) throw DimensionError("rescale_demean_bridge: path too short");
  VectorXd out(grid.size());
  for (int i = 0; i < grid.size(); ++i) {
    double pos = (grid.nodes()[i] - grid.lower()) / grid.measure() * steps;
    int left = std::clamp(static_cast<int>(std::floor(pos)), 0, steps - 1);
    double frac = std::clamp(pos - left, 0.0, 1.0);
    out[i] = (1.0 - frac) * bridge[left] + frac * bridge[left + 1];
  }
  return ClrFunction::demeaned(grid, std::move(out));
}

OrthonormalBasis polynomial_basis(const Grid& grid, int m) {
  if (m < 1) throw ConfigError("polynomial_basis: order must be positive");
  if (m >= grid.size() - 1) throw DimensionError("polynomial_basis: order too large for the grid");
  const VectorXd s = (2.0 * (grid.nodes().array() - grid.lower()) / grid.measure() - 1.0).matrix();
  std::vector<ClrFunction> seed;
  VectorXd prev = VectorXd::Ones(grid.size());
  VectorXd cur = s;
  for (int k = 1; k <= m; ++k) {
    seed.push_back(ClrFunction::demeaned(grid, cur));
    // Bonnet recursion: (k+1) P_{k+1} = (2k+1) s P_k - k P_{k-1}
    VectorXd next = ((2.0 * k + 1.0) * s.cwiseProduct(cur) - k * prev) / (k + 1.0);
    prev = std::move(cur);
    cur = std::move(next);
  }
  return gram_schmidt(seed);
}

namespace {

VectorXd project_onto(const OrthonormalBasis& basis, const Eigen::Ref<const VectorXd>& v) {
  const MatrixXd& q = basis.columns();
  VectorXd coeff = q.transpose() * v.cwiseProduct(basis.grid().weights());
  return q * coeff;
}

}  // namespace

ClrFunction poly_project(const ClrFunction& g, int m) {
  OrthonormalBasis basis = polynomial_basis(g.grid(), m);
  return ClrFunction::demeaned(g.grid(), project_onto(basis, g.values()));
}

InnovationSampler::InnovationSampler(InnovationConfig config)
    : config_((config.validate(), std::move(config))), basis_(polynomial_basis(config_.grid, config_.poly_order)) {}

VectorXd InnovationSampler::draw_clr(RngSeed seed, std::uint64_t substream) const {
  if (config_.scale == 0.0) return VectorXd::Zero(config_.grid.size());
  VectorXd bridge = brownian_bridge(config_.bridge_steps, seed, substream);
  ClrFunction bbar = rescale_demean_bridge(bridge, config_.grid);
  VectorXd out = config_.scale * project_onto(basis_, bbar.values());
  out.array() -= lambda_mean(out, config_.grid);
  return out;
}

Density InnovationSampler::draw(RngSeed seed, std::uint64_t substream) const {
  return clr_inv(draw_clr(seed, substream), config_.grid);
}

Density draw_innovation(const InnovationConfig& config, RngSeed seed, std::uint64_t substream) {
  return InnovationSampler(config).draw(seed, substream);
}

void ARConfig::validate() const {
  if (horizon < 1) throw ConfigError("ar: horizon must be at least 1");
  if (coefficients.empty()) throw ConfigError("ar: at least one coefficient required");
  if (initial.size() != coefficients.size()) throw ConfigError("ar: need one initial density per lag");
  innovation.validate();
  const Grid& grid = innovation.grid;
  for (const auto& a : coefficients) require_same_grid(grid, a.grid(), "ar coefficient");
  for (const auto& f : initial) require_same_grid(grid, f.grid(), "ar initial value");
  if (center) require_same_grid(grid, center->grid(), "ar center");
}

MatrixXd simulate_arp_clr(const ARConfig& config, RngSeed seed) {
  config.validate();
  const Grid& grid = config.innovation.grid;
  const auto p = static_cast<int>(config.coefficients.size());
  const int n = grid.size();
  InnovationSampler sampler(config.innovation);
  VectorXd level = config.center ? clr(*config.center).values() : VectorXd::Zero(n);

  // history[k] holds f_{t-1-k} (-) c in clr coordinates.
  std::vector<VectorXd> history;
  for (const auto& f : config.initial) history.push_back(clr(f).values() - level);

  MatrixXd out(config.horizon, n);
  for (int t = 1; t <= config.horizon; ++t) {
    VectorXd next = sampler.draw_clr(seed, static_cast<std::uint64_t>(t));
    for (int k = 0; k < p; ++k) next.noalias() += config.coefficients[k].matrix() * history[k];
    next.array() -= lambda_mean(next, grid);
    for (int k = p - 1; k > 0; --k) history[k] = std::move(history[k - 1]);
    history[0] = next;
    out.row(t - 1) = (next + level).transpose();
  }
  return out;
}

std::vector<Density> simulate_arp(const ARConfig& config, RngSeed seed) {
  MatrixXd rows = simulate_arp_clr(config, seed);
  const Grid& grid = config.innovation.grid;
  std::vector<Density> out;
  out.reserve(rows.rows());
  for (Eigen::Index t = 0; t < rows.rows(); ++t) {
    try {
      out.push_back(clr_inv(rows.row(t).transpose(), grid));
    } catch (const OverflowError& e) {
      std::ostringstream msg;
      msg << "simulate_arp: t = " << (t + 1) << ": " << e.what();
      throw OverflowError(msg.str());
    }
  }
  return out;
}

std::vector<LinearMap> ma_coefficients(const MaSpec& spec) {
  if (spec.coefficients.empty()) throw ConfigError("ma: at least N_0 is required");
  const Grid& grid = spec.coefficients.front().grid();
  std::vector<double> norms;
  for (const auto& c : spec.coefficients) {
    require_same_grid(grid, c.grid(), "ma coefficient");
    if (!c.matrix().allFinite()) throw ConfigError("ma: non-finite coefficient");
    norms.push_back(operator_norm(c));
  }
  const auto q = static_cast<int>(spec.coefficients.size()) - 1;
  double decay = 0.0;
  if (spec.geometric_decay) {
    decay = *spec.geometric_decay;
    if (!std::isfinite(decay) || std::abs(decay) >= 1.0) {
      throw ConfigError("ma: geometric decay must lie in (-1, 1) for summable coefficients");
    }
  }

  // ||N_k|| for the geometric tail is |decay|^{k-q} ||N_q||.
  auto lag_norm = [&](int k) { return k <= q ? norms[k] : std::pow(std::abs(decay), k - q) * norms[q]; };
  const bool has_tail = spec.geometric_decay && decay != 0.0 && norms[q] > 0.0;

  int max_lag = q;
  if (spec.max_lag) {
    max_lag = *spec.max_lag;
    if (max_lag < 0) throw ConfigError("ma: max_lag must be nonnegative");
  } else if (has_tail) {
    double a = std::abs(decay);
    // sum_{k>q} k a^{k-q} ||N_q|| in closed form.
    double tail_total = norms[q] * (q * a / (1.0 - a) + a / ((1.0 - a) * (1.0 - a)));
    double total = tail_total;
    for (int k = 0; k <= q; ++k) total += k * norms[k];
    double remaining = tail_total;
    max_lag = q;
    while (remaining >= 1e-8 * total) {
      ++max_lag;
      remaining -= max_lag * lag_norm(max_lag);
      if (max_lag > q + 100000) throw ConfigError("ma: tail does not decay fast enough");
    }
  }

  std::vector<LinearMap> out;
  for (int k = 0; k <= max_lag; ++k) {
    if (k <= q) {
      out.push_back(spec.coefficients[k]);
    } else if (spec.geometric_decay) {
      out.push_back(std::pow(decay, k - q) * spec.coefficients[q]);
    } else {
      out.push_back(LinearMap::zero(grid));
    }
  }
  return out;
}

std::vector<Density> simulate_i1_ma(const MaSpec& spec, const Density& f0, const InnovationConfig& innovation,
                                    int horizon, RngSeed seed) {
  if (horizon < 1) throw ConfigError("ma: horizon must be at least 1");
  std::vector<LinearMap> lags = ma_coefficients(spec);
  const Grid& grid = innovation.grid;
  require_same_grid(grid, f0.grid(), "ma initial value");
  require_same_grid(grid, lags.front().grid(), "ma coefficient");
  const auto kmax = static_cast<int>(lags.size()) - 1;
  const int n = grid.size();

  // N(1) and Ncheck_k = -sum_{j>k} N_j, k = 0..K-1.
  MatrixXd long_run = MatrixXd::Zero(n, n);
  for (const auto& l : lags) long_run += l.matrix();
  std::vector<MatrixXd> tail(kmax, MatrixXd::Zero(n, n));
  MatrixXd acc = MatrixXd::Zero(n, n);
  for (int k = kmax - 1; k >= 0; --k) {
    acc -= lags[k + 1].matrix();
    tail[k] = acc;
  }

  // eps_s for s = 1 - K .. T uses substream s + K.
  InnovationSampler sampler(innovation);
  std::vector<VectorXd> eps(static_cast<std::size_t>(horizon + kmax + 1));
  for (int s = -kmax; s <= horizon; ++s) {
    eps[s + kmax] = sampler.draw_clr(seed, static_cast<std::uint64_t>(s + kmax));
  }
  auto nu = [&](int t) {
    VectorXd v = VectorXd::Zero(n);
    for (int k = 0; k < kmax; ++k) v.noalias() += tail[k] * eps[t - k + kmax];
    return v;
  };

  VectorXd base = clr(f0).values() - nu(0);
  VectorXd xi = VectorXd::Zero(n);
  std::vector<Density> out;
  out.reserve(horizon);
  for (int t = 1; t <= horizon; ++t) {
    xi += eps[t + kmax];
    VectorXd ft = base + long_run * xi + nu(t);
    try {
      out.push_back(clr_inv(ft, grid));
    } catch (const OverflowError& e) {
      std::ostringstream msg;
      msg << "simulate_i1_ma: t = " << t << ": " << e.what();
      throw OverflowError(msg.str());
    }
  }
  return out;
}

Density truncated_normal(const Grid& grid, double mean, double sd) {
  VectorXd raw = (-0.5 * ((grid.nodes().array() - mean) / sd).square()).exp().matrix();
  return normalize(raw, grid);
}

HalvingExample halving_example(const Grid& grid, int basis_size) {
  if (basis_size < 1) throw ConfigError("halving_example: basis size must be positive");
  const double cauchy_scale = 0.25;
  VectorXd cauchy_raw = (1.0 + (grid.nodes().array() / cauchy_scale).square()).inverse().matrix();
  Density cauchy = normalize(cauchy_raw, grid);

  std::vector<ClrFunction> seed{clr(cauchy)};
  if (basis_size > 1) {
    OrthonormalBasis fourier = fourier_basis_clr(grid, basis_size);
    for (int j = 1; j < basis_size; ++j) seed.push_back(fourier.function(j));
  }
  OrthonormalBasis basis = gram_schmidt(seed);
  VectorXd lambdas(basis_size);
  for (int j = 0; j < basis_size; ++j) lambdas[j] = std::pow(2.0, -j);
  LinearMap psi = spectral_map(basis, lambdas);
  return HalvingExample{truncated_normal(grid), std::move(cauchy), std::move(basis), std::move(lambdas),
                      std::move(psi)};
}

ARConfig halving_ar1_config(const HalvingExample& example, int horizon, int poly_order) {
  ARConfig config;
  config.coefficients = {example.psi};
  config.initial = {example.center};
  config.center = example.center;
  config.innovation.grid = example.center.grid();
  config.innovation.scale = 0.3;
  config.innovation.poly_order = poly_order;
  config.horizon = horizon;
  return config;
}

}  // namespace denscoint
