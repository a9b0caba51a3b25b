#include "denscoint/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "denscoint/errors.hpp"
#include "denscoint/fpca.hpp"
#include "denscoint/parallel.hpp"

namespace denscoint {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::json;

void PipelineConfig::validate() const {
  if (!(truncate_lower >= 0.0 && truncate_lower < truncate_upper && truncate_upper <= 100.0)) {
    throw ConfigError("config: need 0 <= truncate_lower < truncate_upper <= 100");
  }
  level_index(level);
  if (grid_n < 3) throw ConfigError("config: grid_n must be at least 3");
  if (grid_lower.has_value() != grid_upper.has_value()) {
    throw ConfigError("config: grid_lower and grid_upper must be given together");
  }
  if (grid_lower && !(*grid_lower < *grid_upper)) throw ConfigError("config: grid_lower must be below grid_upper");
  if (!(grid_padding >= 0.0)) throw ConfigError("config: grid_padding must be nonnegative");
  if (grid_rule != "pooled" && grid_rule != "intersection") {
    throw ConfigError("config: grid_rule must be pooled or intersection");
  }
  if (mesh < 2) throw ConfigError("config: mesh must be at least 2");
  if (bandwidth && !(*bandwidth > 0.0)) throw ConfigError("config: bandwidth must be positive");
  if (r_max < 1) throw ConfigError("config: r_max must be at least 1");
  if (critical_values != "builtin" && critical_values != "simulate") {
    throw ConfigError("config: critical_values must be builtin or simulate");
  }
  if (critical_values == "builtin" && !demeaned) {
    throw ConfigError("config: built-in critical values exist only for the demeaned statistic");
  }
  if (critical_values == "simulate" && (cv_paths < 1000 || cv_steps < 200)) {
    throw ConfigError("config: simulated critical values need cv_paths >= 1000 and cv_steps >= 200");
  }
  if (eigen_count < 1) throw ConfigError("config: eigen_count must be positive");
  if (!std::isfinite(perturbation_scale)) throw ConfigError("config: perturbation_scale must be finite");
}

json PipelineConfig::to_json() const {
  auto opt = [](const auto& v) -> json { return v ? json(*v) : json(nullptr); };
  return json{{"input", input},
              {"deflator", opt(deflator)},
              {"base_period", opt(base_period)},
              {"truncate_lower", truncate_lower},
              {"truncate_upper", truncate_upper},
              {"grid_n", grid_n},
              {"grid_lower", opt(grid_lower)},
              {"grid_upper", opt(grid_upper)},
              {"grid_padding", grid_padding},
              {"grid_rule", grid_rule},
              {"mesh", mesh},
              {"bandwidth", bandwidth ? json(*bandwidth) : json("auto")},
              {"r_max", r_max},
              {"level", level},
              {"critical_values", critical_values},
              {"cv_paths", cv_paths},
              {"cv_steps", cv_steps},
              {"demeaned", demeaned},
              {"perturbation_scale", perturbation_scale},
              {"eigen_count", eigen_count},
              {"seed", seed},
              {"output_dir", output_dir}};
}

PipelineConfig PipelineConfig::from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  PipelineConfig c;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "input") c.input = v.get<std::string>();
      else if (key == "deflator") c.deflator = v.is_null() ? std::nullopt : std::optional(v.get<std::string>());
      else if (key == "base_period") c.base_period = v.is_null() ? std::nullopt : std::optional(v.get<int>());
      else if (key == "truncate_lower") c.truncate_lower = v.get<double>();
      else if (key == "truncate_upper") c.truncate_upper = v.get<double>();
      else if (key == "grid_n") c.grid_n = v.get<int>();
      else if (key == "grid_lower") c.grid_lower = v.is_null() ? std::nullopt : std::optional(v.get<double>());
      else if (key == "grid_upper") c.grid_upper = v.is_null() ? std::nullopt : std::optional(v.get<double>());
      else if (key == "grid_padding") c.grid_padding = v.get<double>();
      else if (key == "grid_rule") c.grid_rule = v.get<std::string>();
      else if (key == "mesh") c.mesh = v.get<int>();
      else if (key == "bandwidth") {
        if (v.is_null() || (v.is_string() && v.get<std::string>() == "auto")) c.bandwidth.reset();
        else c.bandwidth = v.get<double>();
      } else if (key == "r_max") c.r_max = v.get<int>();
      else if (key == "level") c.level = v.get<double>();
      else if (key == "critical_values") c.critical_values = v.get<std::string>();
      else if (key == "cv_paths") c.cv_paths = v.get<int>();
      else if (key == "cv_steps") c.cv_steps = v.get<int>();
      else if (key == "demeaned") c.demeaned = v.get<bool>();
      else if (key == "perturbation_scale") c.perturbation_scale = v.get<double>();
      else if (key == "eigen_count") c.eigen_count = v.get<int>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "output_dir") c.output_dir = v.get<std::string>();
      else throw ConfigError("config: unknown key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return c;
}

std::vector<CrossSection> ingest_rows(const SampleRows& rows) {
  if (rows.t.empty()) throw FormatError("ingest: no observations");
  const bool weighted = !rows.w.empty();
  std::map<int, std::pair<std::vector<double>, std::vector<double>>> by_period;
  for (std::size_t i = 0; i < rows.t.size(); ++i) {
    auto& slot = by_period[rows.t[i]];
    slot.first.push_back(rows.x[i]);
    if (weighted) slot.second.push_back(rows.w[i]);
  }
  const int first = by_period.begin()->first;
  const int last = by_period.rbegin()->first;
  if (static_cast<std::size_t>(last - first + 1) != by_period.size()) {
    for (int t = first; t <= last; ++t) {
      if (!by_period.count(t)) throw FormatError("ingest: period " + std::to_string(t) + " is empty");
    }
  }
  std::vector<CrossSection> out;
  out.reserve(by_period.size());
  for (auto& [t, slot] : by_period) {
    VectorXd x = Eigen::Map<const VectorXd>(slot.first.data(), static_cast<Eigen::Index>(slot.first.size()));
    VectorXd w;
    if (weighted) w = Eigen::Map<const VectorXd>(slot.second.data(), static_cast<Eigen::Index>(slot.second.size()));
    out.emplace_back(t, std::move(x), std::move(w));
  }
  return out;
}

std::vector<CrossSection> ingest(const std::string& path) { return ingest_rows(read_samples_csv(path)); }

std::vector<CrossSection> deflate(const std::vector<CrossSection>& sections,
                                  const std::vector<std::pair<int, double>>& index, std::optional<int> base_period) {
  if (sections.empty()) return {};
  std::map<int, double> lookup(index.begin(), index.end());
  const int base = base_period.value_or(sections.front().period());
  auto find = [&](int t) {
    auto it = lookup.find(t);
    if (it == lookup.end()) throw FormatError("deflate: no index value for period " + std::to_string(t));
    return it->second;
  };
  const double base_value = find(base);
  std::vector<CrossSection> out;
  out.reserve(sections.size());
  for (const auto& cs : sections) {
    double factor = base_value / find(cs.period());
    out.emplace_back(cs.period(), cs.observations() * factor, cs.weights());
  }
  return out;
}

CrossSection percentile_truncate(const CrossSection& cs, double lower, double upper) {
  if (!(lower >= 0.0 && lower < upper && upper <= 100.0)) {
    throw ConfigError("percentile_truncate: need 0 <= lower < upper <= 100");
  }
  const double lo = weighted_percentile(cs, lower);
  const double hi = weighted_percentile(cs, upper);
  std::vector<double> x;
  std::vector<double> w;
  for (int i = 0; i < cs.size(); ++i) {
    double v = cs.observations()[i];
    if (v >= lo && v <= hi) {
      x.push_back(v);
      w.push_back(cs.weights()[i]);
    }
  }
  if (x.empty()) throw FormatError("percentile_truncate: band empties period " + std::to_string(cs.period()));
  return CrossSection(cs.period(), Eigen::Map<VectorXd>(x.data(), static_cast<Eigen::Index>(x.size())),
                      Eigen::Map<VectorXd>(w.data(), static_cast<Eigen::Index>(w.size())));
}

Grid common_grid(const std::vector<CrossSection>& sections, int n, double lower, double upper, double padding) {
  if (sections.empty()) throw FormatError("common_grid: no cross sections");
  std::vector<std::pair<double, double>> pooled;
  for (const auto& cs : sections) {
    for (int i = 0; i < cs.size(); ++i) pooled.emplace_back(cs.observations()[i], cs.weights()[i]);
  }
  std::sort(pooled.begin(), pooled.end());
  VectorXd x(static_cast<Eigen::Index>(pooled.size()));
  VectorXd w(x.size());
  for (std::size_t i = 0; i < pooled.size(); ++i) {
    x[static_cast<Eigen::Index>(i)] = pooled[i].first;
    w[static_cast<Eigen::Index>(i)] = pooled[i].second;
  }
  double lo = weighted_percentile(x, w, lower);
  double hi = weighted_percentile(x, w, upper);
  if (!(hi > lo)) throw DegenerateData("common_grid: pooled percentile band has zero width");
  double pad = padding * (hi - lo);
  return Grid(lo - pad, hi + pad, n);
}

Grid intersection_grid(const std::vector<CrossSection>& sections, int n) {
  if (sections.empty()) throw FormatError("intersection_grid: no cross sections");
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  for (const auto& cs : sections) {
    lo = std::max(lo, cs.observations().minCoeff());
    hi = std::min(hi, cs.observations().maxCoeff());
  }
  if (!(hi > lo)) throw DegenerateData("intersection_grid: period ranges do not overlap");
  return Grid(lo, hi, n);
}

CrossSection restrict_to(const CrossSection& cs, const Grid& grid) {
  std::vector<double> x;
  std::vector<double> w;
  for (int i = 0; i < cs.size(); ++i) {
    double v = cs.observations()[i];
    if (v >= grid.lower() && v <= grid.upper()) {
      x.push_back(v);
      w.push_back(cs.weights()[i]);
    }
  }
  if (x.empty()) throw FormatError("no observations of period " + std::to_string(cs.period()) + " inside the grid");
  return CrossSection(cs.period(), Eigen::Map<VectorXd>(x.data(), static_cast<Eigen::Index>(x.size())),
                      Eigen::Map<VectorXd>(w.data(), static_cast<Eigen::Index>(w.size())));
}

VectorXd sample_density(const Density& f, int n, std::mt19937_64& engine) {
  const Grid& grid = f.grid();
  const VectorXd& x = grid.nodes();
  const VectorXd& v = f.values();
  VectorXd cdf(grid.size());
  cdf[0] = 0.0;
  for (int i = 1; i < grid.size(); ++i) cdf[i] = cdf[i - 1] + 0.5 * grid.step() * (v[i - 1] + v[i]);
  cdf /= cdf[grid.size() - 1];
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  VectorXd out(n);
  for (int k = 0; k < n; ++k) {
    double u = unif(engine);
    auto i = std::upper_bound(cdf.data(), cdf.data() + cdf.size(), u) - cdf.data();
    i = std::clamp<Eigen::Index>(i, 1, grid.size() - 1);
    double span = cdf[i] - cdf[i - 1];
    double frac = span > 0.0 ? (u - cdf[i - 1]) / span : 0.5;
    out[k] = x[i - 1] + frac * (x[i] - x[i - 1]);
  }
  return out;
}

namespace {

template <typename Fn>
auto stage(const std::string& name, Fn&& fn) {
  try {
    return fn();
  } catch (const InputError& e) {
    throw InputError(name + ": " + e.what());
  } catch (const NumericalFailure& e) {
    throw NumericalFailure(name + ": " + e.what());
  }
}

std::string level_key(int i) {
  static const char* keys[3] = {"0.01", "0.05", "0.10"};
  return keys[i];
}

}  // namespace

PipelineReport run_pipeline(const PipelineConfig& config) {
  config.validate();
  if (config.input.empty()) throw ConfigError("config: input is required");
  auto sections = stage("ingest", [&] { return ingest(config.input); });
  if (config.deflator) {
    sections = stage("deflate", [&] { return deflate(sections, read_deflator_csv(*config.deflator), config.base_period); });
  }
  return run_pipeline(config, sections);
}

PipelineReport run_pipeline(const PipelineConfig& config, const std::vector<CrossSection>& raw) {
  config.validate();
  if (raw.size() < 2) throw DimensionError("pipeline: at least two periods required");
  const std::size_t T = raw.size();

  std::vector<CrossSection> sections;
  sections.reserve(T);
  for (const auto& cs : raw) {
    sections.push_back(stage("truncate, period " + std::to_string(cs.period()),
                             [&] { return percentile_truncate(cs, config.truncate_lower, config.truncate_upper); }));
  }

  Grid grid = config.grid_lower ? Grid(*config.grid_lower, *config.grid_upper, config.grid_n)
                                : stage("grid", [&] {
                                    if (config.grid_rule == "intersection") {
                                      return intersection_grid(sections, config.grid_n);
                                    }
                                    return common_grid(sections, config.grid_n, config.truncate_lower,
                                                       config.truncate_upper, config.grid_padding);
                                  });
  for (auto& cs : sections) {
    cs = stage("grid, period " + std::to_string(cs.period()), [&] { return restrict_to(cs, grid); });
  }

  LogDensityOptions opts;
  opts.mesh_points = config.mesh;
  std::vector<std::optional<LogDensityEstimate>> estimates(T);
  std::vector<double> references(T, 0.0);
  std::vector<int> widenings(T, 0);
  parallel_for(T, [&](std::size_t t) {
    const CrossSection& cs = sections[t];
    stage("estimate, period " + std::to_string(cs.period()), [&] {
      double h;
      if (config.bandwidth) {
        h = *config.bandwidth;
      } else {
        BandwidthSelection sel = select_bandwidth_widening(cs, grid, opts);
        h = sel.bandwidth;
        references[t] = sel.reference;
        widenings[t] = sel.widenings;
      }
      estimates[t] = estimate_logdensity(cs, grid, h, opts);
      return 0;
    });
  });

  PipelineReport report;
  report.config = config;
  report.grid = grid;
  report.densities.resize(static_cast<Eigen::Index>(T), grid.size());
  report.clr.resize(static_cast<Eigen::Index>(T), grid.size());
  for (std::size_t t = 0; t < T; ++t) {
    const auto& est = *estimates[t];
    const auto row = static_cast<Eigen::Index>(t);
    report.densities.row(row) = est.density.values().transpose();
    report.clr.row(row) = est.clr.values().transpose();
    const VectorXd& f = est.density.values();
    double mean = integrate(grid.nodes().cwiseProduct(f), grid);
    double var = integrate((grid.nodes().array() - mean).square().matrix().cwiseProduct(f), grid);
    report.periods.push_back(PeriodSummary{sections[t].period(), raw[t].size(), sections[t].size(), est.bandwidth,
                                           references[t], widenings[t], mean, std::sqrt(var)});
  }

  ClrSeries series(grid, report.clr);
  report.critical_values = stage("critical values", [&] {
    if (config.critical_values == "builtin") return builtin_critical_values();
    std::vector<int> dims(static_cast<std::size_t>(config.r_max));
    for (int R = 1; R <= config.r_max; ++R) dims[static_cast<std::size_t>(R - 1)] = R;
    return simulate_critical_table(dims, config.cv_paths, config.cv_steps, config.demeaned,
                                   derive(RngSeed{config.seed, 0}, 1));
  });
  const int eigen_count = std::min(std::max(config.eigen_count, config.r_max), grid.size());
  report.rank = stage("rank test", [&] {
    return sequential_rank(series, config.r_max, config.level, report.critical_values, config.demeaned, eigen_count);
  });

  stage("attractor", [&] {
    EigenSystem eig = eigenpairs(empirical_cov(series, config.demeaned), eigen_count);
    const int r = report.rank.selected;
    VectorXd mean_clr = series.mean();
    if (r >= 1) {
      AttractorEstimate att = estimate_attractor(series, r, config.demeaned);
      report.attractor_basis = att.basis.columns();
      mean_clr -= att.projector.matrix() * mean_clr;
    } else {
      report.attractor_basis.resize(grid.size(), 0);
    }
    report.zeta1 = eig.eigenvalues[0];
    VectorXd shift = config.perturbation_scale * report.zeta1 * eig.eigenfunctions.columns().col(0);
    report.stationary_mean = clr_inv(mean_clr, grid).values();
    report.perturbed_plus = clr_inv(mean_clr + shift, grid).values();
    report.perturbed_minus = clr_inv(mean_clr - shift, grid).values();
    return 0;
  });
  return report;
}

json rank_report_json(const RankTestReport& rank, const CriticalValueTable& table) {
  json steps = json::array();
  for (const auto& s : rank.steps) {
    json crit = json::object();
    json rej = json::object();
    for (int i = 0; i < 3; ++i) {
      crit[level_key(i)] = s.critical[i];
      rej[level_key(i)] = s.reject[i];
    }
    steps.push_back({{"R", s.R}, {"tau", s.tau}, {"bandwidth", s.bandwidth}, {"critical", crit}, {"reject", rej}});
  }
  json by_level = json::object();
  for (int i = 0; i < 3; ++i) by_level[level_key(i)] = rank.selected_by_level[i];
  return json{{"level", rank.level},
              {"demeaned", rank.demeaned},
              {"critical_values",
               {{"provenance", table.provenance}, {"paths", table.paths}, {"steps", table.steps}, {"seed", table.seed}}},
              {"steps", steps},
              {"selected", rank.selected},
              {"selected_by_level", by_level}};
}

json PipelineReport::to_json() const {
  json periods_json = json::array();
  for (const auto& p : periods) {
    periods_json.push_back({{"period", p.period},
                            {"raw_count", p.raw_count},
                            {"kept_count", p.kept_count},
                            {"bandwidth", p.bandwidth},
                            {"reference_bandwidth", p.reference_bandwidth},
                            {"bandwidth_widenings", p.bandwidth_widenings},
                            {"mean", p.mean},
                            {"sd", p.sd}});
  }
  json scree = json::array();
  for (Eigen::Index k = 0; k < rank.scree.size(); ++k) scree.push_back(rank.scree[k]);

  return json{
      {"schema", kReportSchema},
      {"config", config.to_json()},
      {"grid", grid_to_json(grid)},
      {"periods", periods_json},
      {"scree", scree},
      {"rank_test", rank_report_json(rank, critical_values)},
      {"attractor",
       {{"dimension", attractor_basis.cols()},
        {"zeta1", zeta1},
        {"perturbation_scale", config.perturbation_scale}}},
      {"bandwidth_rule", config.bandwidth ? "fixed" : "gbic: -2 loglik + trace(influence) log n over [0.75b, 1.25b], widened by 1.25 while every candidate fails"},
      {"artifacts",
       {"density_matrix.csv", "clr_matrix.csv", "scree.csv", "tau_table.csv", "attractor_basis.csv",
        "perturbations.csv", "report.json"}}};
}

void emit_outputs(const PipelineReport& report, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw FormatError("cannot create " + dir + ": " + ec.message());
  auto path = [&](const char* name) { return (std::filesystem::path(dir) / name).string(); };
  const Grid& grid = report.grid;

  write_matrix_csv(path("density_matrix.csv"), grid, report.densities);
  write_matrix_csv(path("clr_matrix.csv"), grid, report.clr);

  std::ostringstream scree;
  scree << "k,eigenvalue\n";
  for (Eigen::Index k = 0; k < report.rank.scree.size(); ++k) {
    scree << (k + 1) << ',' << format_double(report.rank.scree[k]) << '\n';
  }
  write_text(path("scree.csv"), scree.str());

  std::ostringstream tau;
  tau << "R,tau,bandwidth,cv_0.01,cv_0.05,cv_0.10,reject_0.01,reject_0.05,reject_0.10\n";
  for (const auto& s : report.rank.steps) {
    tau << s.R << ',' << format_double(s.tau) << ',' << format_double(s.bandwidth);
    for (double c : s.critical) tau << ',' << format_double(c);
    for (bool r : s.reject) tau << ',' << (r ? 1 : 0);
    tau << '\n';
  }
  write_text(path("tau_table.csv"), tau.str());

  std::ostringstream basis;
  basis << "x";
  for (Eigen::Index j = 0; j < report.attractor_basis.cols(); ++j) basis << ",v" << (j + 1);
  basis << '\n';
  for (int i = 0; i < grid.size(); ++i) {
    basis << format_double(grid.nodes()[i]);
    for (Eigen::Index j = 0; j < report.attractor_basis.cols(); ++j) basis << ',' << format_double(report.attractor_basis(i, j));
    basis << '\n';
  }
  write_text(path("attractor_basis.csv"), basis.str());

  std::ostringstream pert;
  pert << "x,mean,plus,minus\n";
  for (int i = 0; i < grid.size(); ++i) {
    pert << format_double(grid.nodes()[i]) << ',' << format_double(report.stationary_mean[i]) << ','
         << format_double(report.perturbed_plus[i]) << ',' << format_double(report.perturbed_minus[i]) << '\n';
  }
  write_text(path("perturbations.csv"), pert.str());

  write_text(path("report.json"), report.to_json().dump(2) + "\n");
}

}  // namespace denscoint
