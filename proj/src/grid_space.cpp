#include "denscoint/grid_space.hpp"

#include <cmath>
#include <sstream>

#include "denscoint/errors.hpp"

namespace denscoint {

namespace {

constexpr double kUnitIntegralTol = 1e-10;
constexpr double kZeroIntegralTol = 1e-10;
constexpr double kPositivityFloor = 1e-300;
constexpr double kExpClip = 700.0;
constexpr double kClipTolerance = 1e-8;

void require_length(Eigen::Index len, const Grid& grid, const char* what) {
  if (len != grid.size()) {
    std::ostringstream msg;
    msg << what << ": expected " << grid.size() << " values, got " << len;
    throw DimensionError(msg.str());
  }
}

void require_positive(const Eigen::Ref<const Eigen::VectorXd>& v, const char* what) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!(v[i] > kPositivityFloor)) {
      std::ostringstream msg;
      msg << what << ": value " << v[i] << " at node " << i << " is not positive";
      throw DomainNonPositive(msg.str());
    }
  }
}

double zero_tolerance(const Eigen::VectorXd& v, const Grid& grid) {
  double scale = v.size() > 0 ? v.cwiseAbs().maxCoeff() * grid.measure() : 0.0;
  return kZeroIntegralTol * std::max(1.0, scale);
}

}  // namespace

Grid::Grid(double lower, double upper, int n) : lower_(lower), upper_(upper), n_(n) {
  if (!(upper > lower) || !std::isfinite(lower) || !std::isfinite(upper)) {
    throw DimensionError("grid: upper must exceed lower");
  }
  if (n < 3) throw DimensionError("grid: at least 3 nodes required");
  auto data = std::make_shared<Data>();
  double h = (upper - lower) / (n - 1);
  data->nodes.resize(n);
  for (int i = 0; i < n; ++i) data->nodes[i] = lower + h * i;
  data->nodes[n - 1] = upper;
  data->weights = Eigen::VectorXd::Constant(n, h);
  data->weights[0] = data->weights[n - 1] = 0.5 * h;
  data->sqrt_weights = data->weights.cwiseSqrt();
  data_ = std::move(data);
}

Grid Grid::standard() { return Grid(-3.0, 3.0, 601); }

void require_same_grid(const Grid& a, const Grid& b, const char* what) {
  if (a != b) throw DimensionError(std::string(what) + ": grid mismatch");
}

Density::Density(Grid grid, Eigen::VectorXd values) : grid_(std::move(grid)), values_(std::move(values)) {
  require_length(values_.size(), grid_, "density");
  require_positive(values_, "density");
  double total = integrate(values_, grid_);
  if (std::abs(total - 1.0) > kUnitIntegralTol) {
    std::ostringstream msg;
    msg << "density: integral " << total << " differs from 1";
    throw DomainNonPositive(msg.str());
  }
}

Density Density::uniform(const Grid& grid) {
  return Density(grid, Eigen::VectorXd::Constant(grid.size(), 1.0 / grid.measure()));
}

ClrFunction::ClrFunction(Grid grid, Eigen::VectorXd values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  require_length(values_.size(), grid_, "clr function");
  if (!values_.allFinite()) throw DomainNonPositive("clr function: non-finite value");
  double total = integrate(values_, grid_);
  if (std::abs(total) > zero_tolerance(values_, grid_)) {
    std::ostringstream msg;
    msg << "clr function: integral " << total << " is not zero";
    throw DimensionError(msg.str());
  }
}

ClrFunction ClrFunction::zero(const Grid& grid) {
  return ClrFunction(grid, Eigen::VectorXd::Zero(grid.size()));
}

ClrFunction ClrFunction::demeaned(const Grid& grid, Eigen::VectorXd values) {
  require_length(values.size(), grid, "clr function");
  values.array() -= lambda_mean(values, grid);
  return ClrFunction(grid, std::move(values));
}

double integrate(const Eigen::Ref<const Eigen::VectorXd>& values, const Grid& grid) {
  require_length(values.size(), grid, "integrate");
  return grid.weights().dot(values);
}

double integrate(const ClrFunction& g) { return integrate(g.values(), g.grid()); }

double lambda_mean(const Eigen::Ref<const Eigen::VectorXd>& values, const Grid& grid) {
  return integrate(values, grid) / grid.measure();
}

double dot(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b,
           const Grid& grid) {
  require_length(a.size(), grid, "dot");
  require_length(b.size(), grid, "dot");
  return (a.array() * b.array() * grid.weights().array()).sum();
}

double norm(const Eigen::Ref<const Eigen::VectorXd>& a, const Grid& grid) {
  return std::sqrt(dot(a, a, grid));
}

Density normalize(const Eigen::Ref<const Eigen::VectorXd>& raw, const Grid& grid) {
  require_length(raw.size(), grid, "normalize");
  require_positive(raw, "normalize");
  Eigen::VectorXd values = raw / integrate(raw, grid);
  return Density(grid, std::move(values));
}

ClrFunction clr(const Density& f) {
  Eigen::VectorXd logf = f.values().array().log().matrix();
  return ClrFunction::demeaned(f.grid(), std::move(logf));
}

Density clr_inv(const Eigen::Ref<const Eigen::VectorXd>& values, const Grid& grid) {
  require_length(values.size(), grid, "clr_inv");
  if (!values.allFinite()) throw OverflowError("clr_inv: non-finite input");
  Eigen::VectorXd g = values;
  g.array() -= lambda_mean(g, grid);

  // Normalization is scale-free, so shift by the maximum before exponentiating.
  auto exp_normalized = [&grid](const Eigen::VectorXd& v) {
    Eigen::VectorXd e = (v.array() - v.maxCoeff()).exp().matrix();
    return Eigen::VectorXd(e / integrate(e, grid));
  };

  Eigen::VectorXd clipped = g.cwiseMax(-kExpClip).cwiseMin(kExpClip);
  Eigen::VectorXd result = exp_normalized(clipped);
  if (clipped != g) {
    Eigen::VectorXd exact = exp_normalized(g);
    if ((exact - result).cwiseAbs().maxCoeff() > kClipTolerance) {
      throw OverflowError("clr_inv: clr values beyond +-700 change the density");
    }
  }
  if (!(result.minCoeff() > kPositivityFloor)) {
    throw OverflowError("clr_inv: density dynamic range exceeds double precision");
  }
  return Density(grid, std::move(result));
}

Density clr_inv(const ClrFunction& g) { return clr_inv(g.values(), g.grid()); }

Density perturb(const Density& f, const Density& g) {
  require_same_grid(f.grid(), g.grid(), "perturb");
  Eigen::VectorXd product = f.values().cwiseProduct(g.values());
  return normalize(product, f.grid());
}

Density subtract(const Density& f, const Density& g) {
  require_same_grid(f.grid(), g.grid(), "subtract");
  return clr_inv(clr(f).values() - clr(g).values(), f.grid());
}

Density power(double a, const Density& f) {
  if (!std::isfinite(a)) throw OverflowError("power: non-finite exponent");
  if (a == 1.0) return f;
  return clr_inv(a * clr(f).values(), f.grid());
}

double inner_product(const Density& f, const Density& g) {
  require_same_grid(f.grid(), g.grid(), "inner_product");
  return dot(clr(f).values(), clr(g).values(), f.grid());
}

}  // namespace denscoint
