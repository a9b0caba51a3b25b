#include "denscoint/logdensity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "denscoint/errors.hpp"

namespace denscoint {

using Eigen::MatrixXd;
using Eigen::VectorXd;

CrossSection::CrossSection(int period, VectorXd observations, VectorXd weights) : period_(period) {
  const Eigen::Index n = observations.size();
  if (n == 0) throw FormatError("cross section: no observations in period " + std::to_string(period));
  if (weights.size() == 0) weights = VectorXd::Ones(n);
  if (weights.size() != n) throw FormatError("cross section: observation and weight counts differ");
  if (!observations.allFinite() || !weights.allFinite()) throw FormatError("cross section: non-finite values");
  if ((weights.array() <= 0.0).any()) throw FormatError("cross section: weights must be positive");

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return observations[a] < observations[b]; });
  x_.resize(n);
  w_.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    x_[i] = observations[order[static_cast<std::size_t>(i)]];
    w_[i] = weights[order[static_cast<std::size_t>(i)]];
  }
  w_ *= static_cast<double>(n) / w_.sum();
}

double tricube(double u) {
  double a = std::abs(u);
  if (a >= 1.0) return 0.0;
  double c = 1.0 - a * a * a;
  return 70.0 / 81.0 * c * c * c;
}

void LogDensityOptions::validate() const {
  if (degree < 0 || degree > 3) throw ConfigError("logdensity: degree must lie in [0, 3]");
  if (mesh_points < 2) throw ConfigError("logdensity: mesh needs at least two points");
  if (quadrature_points < 3) throw ConfigError("logdensity: quadrature needs at least three points");
  if (max_iterations < 1) throw ConfigError("logdensity: max_iterations must be positive");
  if (!(gradient_tolerance > 0.0)) throw ConfigError("logdensity: gradient tolerance must be positive");
}

namespace {

// Everything about one evaluation point that does not depend on alpha.
struct LocalProblem {
  int p;
  double n;
  VectorXd data_moments;  // S_k = sum w W d^k
  VectorXd offsets;       // quadrature points minus x
  VectorXd kernel;        // kernel value times quadrature weight
};

LocalProblem setup(const CrossSection& cs, double x, double h, const Grid& support, const LogDensityOptions& opt) {
  if (!(h > 0.0)) throw ConfigError("logdensity: bandwidth must be positive");
  LocalProblem lp;
  lp.p = opt.degree;
  lp.n = static_cast<double>(cs.size());
  lp.data_moments = VectorXd::Zero(lp.p + 1);
  const VectorXd& xs = cs.observations();
  const VectorXd& ws = cs.weights();
  auto first = std::upper_bound(xs.data(), xs.data() + xs.size(), x - h);
  auto last = std::lower_bound(xs.data(), xs.data() + xs.size(), x + h);
  for (auto it = first; it < last; ++it) {
    const Eigen::Index i = it - xs.data();
    double d = xs[i] - x;
    double k = ws[i] * tricube(d / h);
    double pw = 1.0;
    for (int j = 0; j <= lp.p; ++j) {
      lp.data_moments[j] += k * pw;
      pw *= d;
    }
  }

  const double a = std::max(x - h, support.lower());
  const double b = std::min(x + h, support.upper());
  const int q = opt.quadrature_points;
  lp.offsets.resize(q);
  lp.kernel.resize(q);
  const double step = b > a ? (b - a) / (q - 1) : 0.0;
  for (int j = 0; j < q; ++j) {
    double u = a + step * j;
    lp.offsets[j] = u - x;
    double tw = (j == 0 || j == q - 1) ? 0.5 * step : step;
    lp.kernel[j] = tricube((u - x) / h) * tw;
  }
  return lp;
}

bool window_empty(const CrossSection& cs, double x, double h) {
  const VectorXd& xs = cs.observations();
  auto first = std::upper_bound(xs.data(), xs.data() + xs.size(), x - h);
  return first == xs.data() + xs.size() || *first >= x + h;
}

LocalObjective evaluate(const LocalProblem& lp, const VectorXd& alpha) {
  const int m = lp.p + 1;
  VectorXd integrals = VectorXd::Zero(2 * lp.p + 1);
  for (Eigen::Index j = 0; j < lp.offsets.size(); ++j) {
    double d = lp.offsets[j];
    double qv = 0.0;
    double pw = 1.0;
    for (int k = 0; k < m; ++k) {
      qv += alpha[k] * pw;
      pw *= d;
    }
    double e = lp.n * lp.kernel[j] * std::exp(qv);
    pw = 1.0;
    for (int k = 0; k <= 2 * lp.p; ++k) {
      integrals[k] += e * pw;
      pw *= d;
    }
  }
  LocalObjective out;
  out.value = lp.data_moments.dot(alpha) - integrals[0];
  out.gradient = lp.data_moments - integrals.head(m);
  out.hessian.resize(m, m);
  for (int k = 0; k < m; ++k) {
    for (int l = 0; l < m; ++l) out.hessian(k, l) = -integrals[k + l];
  }
  return out;
}

}  // namespace

LocalObjective local_loglik(const CrossSection& cs, double x, double h, const VectorXd& alpha, const Grid& support,
                            const LogDensityOptions& options) {
  options.validate();
  if (alpha.size() != options.degree + 1) throw DimensionError("local_loglik: alpha has the wrong length");
  return evaluate(setup(cs, x, h, support, options), alpha);
}

LocalFit fit_local(const CrossSection& cs, double x, double h, const Grid& support, const LogDensityOptions& options,
                   const std::optional<VectorXd>& start) {
  options.validate();
  if (window_empty(cs, x, h)) {
    std::ostringstream msg;
    msg << "fit_local: no observations within " << h << " of x = " << x;
    throw EmptyWindow(msg.str());
  }
  LocalProblem lp = setup(cs, x, h, support, options);
  const int m = options.degree + 1;

  VectorXd alpha = VectorXd::Zero(m);
  if (start && start->size() == m && start->allFinite()) {
    alpha = *start;
  } else {
    double mass = lp.n * lp.kernel.sum();
    alpha[0] = std::log(lp.data_moments[0] / mass);
  }

  LocalObjective cur = evaluate(lp, alpha);
  if (!std::isfinite(cur.value)) {
    alpha.setZero();
    alpha[0] = std::log(lp.data_moments[0] / (lp.n * lp.kernel.sum()));
    cur = evaluate(lp, alpha);
  }
  int iter = 0;
  bool converged = cur.gradient.norm() < options.gradient_tolerance;
  while (!converged && iter < options.max_iterations) {
    ++iter;
    Eigen::LDLT<MatrixXd> ldlt(-cur.hessian);
    VectorXd step = ldlt.solve(cur.gradient);
    if (ldlt.info() != Eigen::Success || !step.allFinite()) step = cur.gradient / std::max(1.0, -cur.hessian(0, 0));
    double scale = 1.0;
    bool improved = false;
    // Near the optimum the objective gain drops below rounding noise; there a
    // step counts as progress only if it shrinks the gradient.
    const double noise = 1e-12 * (1.0 + std::abs(cur.value));
    const double gnorm = cur.gradient.norm();
    for (int halving = 0; halving < 40; ++halving) {
      VectorXd trial = alpha + scale * step;
      LocalObjective next = evaluate(lp, trial);
      bool accept = std::isfinite(next.value) &&
                    (next.value > cur.value + noise ||
                     (next.value >= cur.value - noise && next.gradient.norm() < gnorm));
      if (accept) {
        alpha = trial;
        cur = std::move(next);
        improved = true;
        break;
      }
      scale *= 0.5;
    }
    converged = cur.gradient.norm() < options.gradient_tolerance;
    if (!improved) break;
  }
  if (!converged) {
    std::ostringstream msg;
    msg << "fit_local: no convergence at x = " << x << " after " << iter << " iterations, gradient norm "
        << cur.gradient.norm() << ", alpha = " << alpha.transpose();
    throw NotConverged(msg.str());
  }
  MatrixXd inv = (-cur.hessian).ldlt().solve(MatrixXd::Identity(m, m));
  return LocalFit{x, alpha, true, iter, cur.gradient.norm(), tricube(0.0) * inv(0, 0)};
}

VectorXd pchip_interpolate(const VectorXd& knots, const VectorXd& values, const VectorXd& queries) {
  const Eigen::Index n = knots.size();
  if (n < 2 || values.size() != n) throw DimensionError("pchip: need at least two knots with matching values");
  VectorXd hk = knots.tail(n - 1) - knots.head(n - 1);
  if ((hk.array() <= 0.0).any()) throw DimensionError("pchip: knots must increase");
  VectorXd delta = (values.tail(n - 1) - values.head(n - 1)).cwiseQuotient(hk);
  VectorXd d(n);
  if (n == 2) {
    d.setConstant(delta[0]);
  } else {
    for (Eigen::Index k = 1; k + 1 < n; ++k) {
      if (delta[k - 1] * delta[k] <= 0.0) {
        d[k] = 0.0;
      } else {
        double w1 = 2.0 * hk[k] + hk[k - 1];
        double w2 = hk[k] + 2.0 * hk[k - 1];
        d[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
      }
    }
    auto end_slope = [](double h0, double h1, double m0, double m1) {
      double s = ((2.0 * h0 + h1) * m0 - h0 * m1) / (h0 + h1);
      if (s * m0 <= 0.0) return 0.0;
      if (m0 * m1 <= 0.0 && std::abs(s) > std::abs(3.0 * m0)) return 3.0 * m0;
      return s;
    };
    d[0] = end_slope(hk[0], hk[1], delta[0], delta[1]);
    d[n - 1] = end_slope(hk[n - 2], hk[n - 3], delta[n - 2], delta[n - 3]);
  }

  VectorXd out(queries.size());
  for (Eigen::Index q = 0; q < queries.size(); ++q) {
    double x = queries[q];
    if (x <= knots[0]) {
      out[q] = values[0];
      continue;
    }
    if (x >= knots[n - 1]) {
      out[q] = values[n - 1];
      continue;
    }
    Eigen::Index k = std::upper_bound(knots.data(), knots.data() + n, x) - knots.data() - 1;
    double h = hk[k];
    double t = (x - knots[k]) / h;
    double t2 = t * t;
    double t3 = t2 * t;
    out[q] = (2 * t3 - 3 * t2 + 1) * values[k] + (t3 - 2 * t2 + t) * h * d[k] + (-2 * t3 + 3 * t2) * values[k + 1] +
             (t3 - t2) * h * d[k + 1];
  }
  return out;
}

LogDensityEstimate estimate_logdensity(const CrossSection& cs, const Grid& grid, double h,
                                       const LogDensityOptions& options) {
  options.validate();
  if (!(h > 0.0)) throw ConfigError("estimate_logdensity: bandwidth must be positive");
  const int m = options.mesh_points;
  VectorXd mesh = VectorXd::LinSpaced(m, grid.lower(), grid.upper());
  VectorXd g(m);
  std::vector<LocalFit> fits;
  fits.reserve(static_cast<std::size_t>(m));
  std::vector<double> empty;
  for (int j = 0; j < m; ++j) {
    if (window_empty(cs, mesh[j], h)) empty.push_back(mesh[j]);
  }
  if (!empty.empty()) {
    std::ostringstream msg;
    msg << "estimate_logdensity: period " << cs.period() << ", bandwidth " << h << ": empty kernel window at x =";
    for (double x : empty) msg << ' ' << x;
    throw EmptyWindow(msg.str());
  }
  std::optional<VectorXd> warm;
  for (int j = 0; j < m; ++j) {
    LocalFit fit = fit_local(cs, mesh[j], h, grid, options, warm);
    g[j] = fit.alpha0();
    warm = fit.alpha;
    fits.push_back(std::move(fit));
  }
  VectorXd ghat = pchip_interpolate(mesh, g, grid.nodes());
  ClrFunction c = ClrFunction::demeaned(grid, ghat);
  Density f = clr_inv(c);
  return LogDensityEstimate{std::move(c), std::move(f), std::move(mesh), std::move(g), std::move(fits), h};
}

double weighted_percentile(const VectorXd& sorted_x, const VectorXd& weights, double p) {
  const Eigen::Index n = sorted_x.size();
  if (n == 0 || weights.size() != n) throw DimensionError("weighted_percentile: empty or mismatched input");
  if (!(p >= 0.0 && p <= 100.0)) throw ConfigError("weighted_percentile: p must lie in [0, 100]");
  const double total = weights.sum();
  const double q = p / 100.0;
  double cum = 0.0;
  double prev_pos = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    cum += weights[i];
    double pos = (cum - 0.5 * weights[i]) / total;
    if (q <= pos) {
      if (i == 0) return sorted_x[0];
      double frac = (q - prev_pos) / (pos - prev_pos);
      return sorted_x[i - 1] + frac * (sorted_x[i] - sorted_x[i - 1]);
    }
    prev_pos = pos;
  }
  return sorted_x[n - 1];
}

double weighted_percentile(const CrossSection& cs, double p) {
  return weighted_percentile(cs.observations(), cs.weights(), p);
}

double default_bandwidth(const CrossSection& cs) {
  if (cs.size() < 10) throw DegenerateData("default_bandwidth: at least 10 observations required");
  double spread = weighted_percentile(cs, 99.0) - weighted_percentile(cs, 1.0);
  if (!(spread > 0.0)) throw DegenerateData("default_bandwidth: 1st and 99th percentiles coincide");
  return spread * std::pow(static_cast<double>(cs.size()), -0.2);
}

namespace {

double interpolate_linear(const Grid& grid, const VectorXd& values, double x) {
  double pos = (x - grid.lower()) / grid.step();
  pos = std::clamp(pos, 0.0, static_cast<double>(grid.size() - 1));
  auto i = static_cast<Eigen::Index>(std::floor(pos));
  if (i >= grid.size() - 1) return values[grid.size() - 1];
  double frac = pos - static_cast<double>(i);
  return (1.0 - frac) * values[i] + frac * values[i + 1];
}

}  // namespace

GbicTerms gbic(const CrossSection& cs, const LogDensityEstimate& est) {
  const Grid& grid = est.density.grid();
  VectorXd logf = est.density.values().array().log();
  double loglik = 0.0;
  for (int i = 0; i < cs.size(); ++i) loglik += cs.weights()[i] * interpolate_linear(grid, logf, cs.observations()[i]);

  const Eigen::Index m = est.mesh.size();
  VectorXd integrand(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    integrand[j] = est.fits[static_cast<std::size_t>(j)].self_influence *
                   interpolate_linear(grid, est.density.values(), est.mesh[j]);
  }
  double integral = 0.0;
  for (Eigen::Index j = 0; j + 1 < m; ++j) {
    integral += 0.5 * (est.mesh[j + 1] - est.mesh[j]) * (integrand[j] + integrand[j + 1]);
  }
  const double n = static_cast<double>(cs.size());
  double nu = n * integral;
  return GbicTerms{loglik, nu, -2.0 * loglik + nu * std::log(n)};
}

namespace {

BandwidthSelection search_bandwidth(const CrossSection& cs, const Grid& grid, const LogDensityOptions& options,
                                    double reference, double center) {
  BandwidthSelection sel;
  sel.reference = reference;
  double best = std::numeric_limits<double>::infinity();
  int best_index = -1;
  for (int k = 0; k <= 10; ++k) {
    double h = center * (0.75 + 0.05 * k);
    sel.candidates.push_back(h);
    double crit = std::numeric_limits<double>::quiet_NaN();
    try {
      crit = gbic(cs, estimate_logdensity(cs, grid, h, options)).gbic;
    } catch (const NumericalFailure&) {
    }
    sel.criteria.push_back(crit);
    if (std::isfinite(crit) && crit < best) {
      best = crit;
      best_index = k;
    }
  }
  sel.bandwidth = best_index < 0 ? std::numeric_limits<double>::quiet_NaN()
                                 : sel.candidates[static_cast<std::size_t>(best_index)];
  return sel;
}

[[noreturn]] void selection_failed(const CrossSection& cs, const BandwidthSelection& sel) {
  std::ostringstream msg;
  msg << "select_bandwidth: every candidate in [" << sel.candidates.front() << ", " << sel.candidates.back()
      << "] failed for period " << cs.period();
  throw BandwidthSelectionFailed(msg.str());
}

}  // namespace

BandwidthSelection select_bandwidth_details(const CrossSection& cs, const Grid& grid,
                                            const LogDensityOptions& options) {
  const double b = default_bandwidth(cs);
  BandwidthSelection sel = search_bandwidth(cs, grid, options, b, b);
  if (std::isnan(sel.bandwidth)) selection_failed(cs, sel);
  return sel;
}

BandwidthSelection select_bandwidth_widening(const CrossSection& cs, const Grid& grid,
                                             const LogDensityOptions& options, int max_widenings) {
  const double b = default_bandwidth(cs);
  double center = b;
  for (int k = 0;; ++k) {
    BandwidthSelection sel = search_bandwidth(cs, grid, options, b, center);
    sel.widenings = k;
    if (!std::isnan(sel.bandwidth)) return sel;
    if (k == max_widenings) selection_failed(cs, sel);
    center *= 1.25;
  }
}

double select_bandwidth(const CrossSection& cs, const Grid& grid, const LogDensityOptions& options) {
  return select_bandwidth_details(cs, grid, options).bandwidth;
}

}  // namespace denscoint
