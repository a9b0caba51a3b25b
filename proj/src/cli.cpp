#include "denscoint/cli.hpp"

#include <CLI11.hpp>
#include <cstring>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "denscoint/errors.hpp"
#include "denscoint/fpca.hpp"
#include "denscoint/io.hpp"
#include "denscoint/logdensity.hpp"
#include "denscoint/parallel.hpp"
#include "denscoint/pipeline.hpp"
#include "denscoint/rank_test.hpp"
#include "denscoint/simulate.hpp"

namespace denscoint {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::json;

namespace {

std::vector<int> parse_dimensions(const std::string& spec) {
  std::vector<int> dims;
  auto to_int = [&](const std::string& s) {
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != s.size()) throw ConfigError("--R: cannot parse '" + spec + "'");
    return v;
  };
  auto dots = spec.find("..");
  if (dots != std::string::npos) {
    int a = to_int(spec.substr(0, dots));
    int b = to_int(spec.substr(dots + 2));
    if (a > b) throw ConfigError("--R: empty range '" + spec + "'");
    for (int r = a; r <= b; ++r) dims.push_back(r);
  } else {
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) dims.push_back(to_int(item));
  }
  if (dims.empty()) throw ConfigError("--R: no dimensions given");
  return dims;
}

std::optional<std::string> find_config_path(int argc, const char* const* argv) {
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--config") == 0 && i + 1 < argc) return std::string(argv[i + 1]);
    if (std::strncmp(argv[i], "--config=", 9) == 0) return std::string(argv[i] + 9);
  }
  return std::nullopt;
}

void emit_json(const json& j, const std::string& path, std::ostream& out) {
  if (path.empty()) {
    out << j.dump(2) << '\n';
  } else {
    write_text(path, j.dump(2) + "\n");
  }
}

std::string join(const std::string& dir, const char* name) { return (std::filesystem::path(dir) / name).string(); }

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw FormatError("cannot create " + dir + ": " + ec.message());
}

std::optional<double> parse_bandwidth(const std::string& text) {
  if (text == "auto") return std::nullopt;
  std::size_t used = 0;
  double h = 0.0;
  try {
    h = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size() || !(h > 0.0)) throw ConfigError("--bandwidth must be auto or a positive number");
  return h;
}

CriticalValueTable critical_table(const PipelineConfig& cfg, int r_max) {
  if (cfg.critical_values == "builtin") {
    if (!cfg.demeaned) throw ConfigError("built-in critical values exist only for the demeaned statistic");
    return builtin_critical_values();
  }
  std::vector<int> dims;
  for (int R = 1; R <= r_max; ++R) dims.push_back(R);
  return simulate_critical_table(dims, cfg.cv_paths, cfg.cv_steps, cfg.demeaned, derive(RngSeed{cfg.seed, 0}, 1));
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  PipelineConfig cfg;
  CLI::App app{"Cointegration analysis of density-valued time series", "denscoint"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  unsigned threads = 0;
  app.add_option("--config", config_path, "JSON file with PipelineConfig fields");
  app.add_option("--seed", cfg.seed, "Base random seed");
  app.add_option("--threads", threads, "Worker threads (0 = all cores)");

  // simulate
  auto* sim = app.add_subcommand("simulate", "Simulate a density-valued process");
  std::string preset = "halving-ar1";
  int sim_T = 1000;
  int sim_grid_n = 601;
  int sim_m = 10;
  double sim_scale = 0.3;
  std::string sim_out;
  sim->add_option("--preset", preset)->check(CLI::IsMember({"halving-ar1", "random-walk", "stationary"}));
  sim->add_option("--T", sim_T);
  sim->add_option("--grid-n", sim_grid_n);
  sim->add_option("--m", sim_m);
  sim->add_option("--scale", sim_scale);
  sim->add_option("--out", sim_out)->required();

  // estimate
  auto* est = app.add_subcommand("estimate", "Estimate per-period log densities from samples");
  std::string est_input, est_out, est_bw = "auto";
  double est_lower = 0.0, est_upper = 0.0;
  auto* opt_lower = est->add_option("--grid-lower", est_lower);
  auto* opt_upper = est->add_option("--grid-upper", est_upper);
  est->add_option("--input", est_input)->required();
  est->add_option("--grid-n", cfg.grid_n);
  est->add_option("--mesh", cfg.mesh);
  est->add_option("--bandwidth", est_bw);
  est->add_option("--out", est_out)->required();

  // fpca
  auto* fp = app.add_subcommand("fpca", "Eigen-decomposition of the clr covariance");
  std::string fp_input, fp_out;
  int fp_r = 1;
  fp->add_option("--input", fp_input)->required();
  fp->add_option("--k", cfg.eigen_count);
  fp->add_option("--r", fp_r);
  fp->add_option("--demeaned", cfg.demeaned);
  fp->add_option("--out", fp_out);

  // rank-test
  auto* rt = app.add_subcommand("rank-test", "Sequential test for the attractor dimension");
  std::string rt_input, rt_out;
  rt->add_option("--input", rt_input)->required();
  rt->add_option("--rmax", cfg.r_max);
  rt->add_option("--level", cfg.level);
  rt->add_option("--cv", cfg.critical_values)->check(CLI::IsMember({"builtin", "simulate"}));
  rt->add_option("--paths", cfg.cv_paths);
  rt->add_option("--steps", cfg.cv_steps);
  rt->add_option("--demeaned", cfg.demeaned);
  rt->add_option("--k", cfg.eigen_count);
  rt->add_option("--out", rt_out);

  // critval
  auto* cv = app.add_subcommand("critval", "Monte Carlo critical values of the tau statistic");
  std::string cv_dims = "1..7", cv_out;
  cv->add_option("--R", cv_dims);
  cv->add_option("--paths", cfg.cv_paths);
  cv->add_option("--steps", cfg.cv_steps);
  cv->add_option("--demeaned", cfg.demeaned);
  cv->add_option("--out", cv_out);

  // pipeline
  auto* pl = app.add_subcommand("pipeline", "Run the full analysis on cross-sectional samples");
  std::string pl_bw;
  double pl_lower = 0.0, pl_upper = 0.0;
  std::string pl_deflator;
  int pl_base = 0;
  pl->add_option("--input", cfg.input);
  pl->add_option("--out", cfg.output_dir);
  auto* opt_deflator = pl->add_option("--deflator", pl_deflator);
  auto* opt_base = pl->add_option("--base-period", pl_base);
  pl->add_option("--truncate-lower", cfg.truncate_lower);
  pl->add_option("--truncate-upper", cfg.truncate_upper);
  auto* opt_pl_lower = pl->add_option("--grid-lower", pl_lower);
  auto* opt_pl_upper = pl->add_option("--grid-upper", pl_upper);
  pl->add_option("--grid-n", cfg.grid_n);
  pl->add_option("--grid-rule", cfg.grid_rule)->check(CLI::IsMember({"pooled", "intersection"}));
  pl->add_option("--mesh", cfg.mesh);
  auto* opt_pl_bw = pl->add_option("--bandwidth", pl_bw);
  pl->add_option("--rmax", cfg.r_max);
  pl->add_option("--level", cfg.level);
  pl->add_option("--cv", cfg.critical_values)->check(CLI::IsMember({"builtin", "simulate"}));
  pl->add_option("--paths", cfg.cv_paths);
  pl->add_option("--steps", cfg.cv_steps);
  pl->add_option("--demeaned", cfg.demeaned);
  pl->add_option("--perturbation-scale", cfg.perturbation_scale);
  pl->add_option("--k", cfg.eigen_count);

  try {
    // Values from --config are loaded first so that explicit flags override them.
    if (auto path = find_config_path(argc, argv)) cfg = PipelineConfig::from_json(read_json(*path));
    try {
      app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
      int code = app.exit(e, out, err);
      return code == 0 ? 0 : 2;
    }
    set_thread_count(threads);

    if (sim->parsed()) {
      if (sim_T < 1) throw ConfigError("--T must be positive");
      Grid grid(-3.0, 3.0, sim_grid_n);
      ARConfig ar;
      if (preset == "halving-ar1") {
        ar = halving_ar1_config(halving_example(grid), sim_T, sim_m);
      } else {
        Density g = truncated_normal(grid);
        double rho = preset == "random-walk" ? 1.0 : 0.5;
        ar.coefficients = {rho * LinearMap::identity(grid)};
        ar.initial = {g};
        ar.center = g;
        ar.innovation.grid = grid;
        ar.innovation.poly_order = sim_m;
        ar.horizon = sim_T;
      }
      ar.innovation.scale = sim_scale;
      MatrixXd clr_rows = simulate_arp_clr(ar, RngSeed{cfg.seed, 0});
      MatrixXd dens(clr_rows.rows(), clr_rows.cols());
      for (Eigen::Index t = 0; t < clr_rows.rows(); ++t) {
        dens.row(t) = clr_inv(clr_rows.row(t).transpose(), grid).values().transpose();
      }
      ensure_dir(sim_out);
      write_matrix_csv(join(sim_out, "density_matrix.csv"), grid, dens);
      write_matrix_csv(join(sim_out, "clr_matrix.csv"), grid, clr_rows);
      return 0;
    }

    if (est->parsed()) {
      auto sections = ingest(est_input);
      if (opt_lower->count() != opt_upper->count()) throw ConfigError("--grid-lower and --grid-upper go together");
      Grid grid = opt_lower->count() ? Grid(est_lower, est_upper, cfg.grid_n)
                                     : common_grid(sections, cfg.grid_n, 1.0, 99.0, cfg.grid_padding);
      for (auto& cs : sections) cs = restrict_to(cs, grid);
      std::optional<double> fixed = parse_bandwidth(est_bw);
      LogDensityOptions opts;
      opts.mesh_points = cfg.mesh;
      const auto T = sections.size();
      MatrixXd dens(static_cast<Eigen::Index>(T), grid.size());
      MatrixXd clr_rows(static_cast<Eigen::Index>(T), grid.size());
      std::vector<json> logs(T);
      parallel_for(T, [&](std::size_t t) {
        const auto& cs = sections[t];
        json entry{{"period", cs.period()}, {"n", cs.size()}};
        double h;
        if (fixed) {
          h = *fixed;
          entry["rule"] = "fixed";
        } else {
          BandwidthSelection sel = select_bandwidth_widening(cs, grid, opts);
          h = sel.bandwidth;
          entry["rule"] = "gbic";
          entry["reference"] = sel.reference;
          entry["widenings"] = sel.widenings;
          entry["candidates"] = sel.candidates;
          json crit = json::array();
          for (double c : sel.criteria) crit.push_back(std::isfinite(c) ? json(c) : json(nullptr));
          entry["criteria"] = crit;
        }
        entry["bandwidth"] = h;
        LogDensityEstimate e = estimate_logdensity(cs, grid, h, opts);
        dens.row(static_cast<Eigen::Index>(t)) = e.density.values().transpose();
        clr_rows.row(static_cast<Eigen::Index>(t)) = e.clr.values().transpose();
        logs[t] = std::move(entry);
      });
      ensure_dir(est_out);
      write_matrix_csv(join(est_out, "density_matrix.csv"), grid, dens);
      write_matrix_csv(join(est_out, "clr_matrix.csv"), grid, clr_rows);
      write_text(join(est_out, "bandwidths.json"), json{{"grid", grid_to_json(grid)}, {"periods", logs}}.dump(2) + "\n");
      return 0;
    }

    if (fp->parsed()) {
      GridMatrix m = read_matrix_csv(fp_input);
      ClrSeries series(m.grid, m.rows);
      const int k = std::min(cfg.eigen_count, m.grid.size());
      EigenSystem eig = eigenpairs(empirical_cov(series, cfg.demeaned), std::max(k, fp_r));
      AttractorEstimate att = estimate_attractor(series, fp_r, cfg.demeaned);
      json basis = json::array();
      for (int j = 0; j < att.basis.size(); ++j) {
        const VectorXd v = att.basis.columns().col(j);
        basis.push_back(std::vector<double>(v.data(), v.data() + v.size()));
      }
      const LinearMap& p = att.projector;
      json report{{"grid", grid_to_json(m.grid)},
                  {"demeaned", cfg.demeaned},
                  {"eigenvalues", std::vector<double>(eig.eigenvalues.data(), eig.eigenvalues.data() + eig.eigenvalues.size())},
                  {"r", fp_r},
                  {"basis", basis},
                  {"projector",
                   {{"operator_norm", operator_norm(p)},
                    {"idempotence_error", operator_norm(p * p - p)},
                    {"self_adjointness_error", operator_norm(p - adjoint(p))},
                    {"clr_space_leakage", clr_space_leakage(p)}}}};
      emit_json(report, fp_out, out);
      return 0;
    }

    if (rt->parsed()) {
      GridMatrix m = read_matrix_csv(rt_input);
      ClrSeries series(m.grid, m.rows);
      CriticalValueTable table = critical_table(cfg, cfg.r_max);
      const int k = std::min(std::max(cfg.eigen_count, cfg.r_max), m.grid.size());
      RankTestReport rep = sequential_rank(series, cfg.r_max, cfg.level, table, cfg.demeaned, k);
      json j = rank_report_json(rep, table);
      j["scree"] = std::vector<double>(rep.scree.data(), rep.scree.data() + rep.scree.size());
      emit_json(j, rt_out, out);
      return 0;
    }

    if (cv->parsed()) {
      CriticalValueTable table =
          simulate_critical_table(parse_dimensions(cv_dims), cfg.cv_paths, cfg.cv_steps, cfg.demeaned, RngSeed{cfg.seed, 0});
      std::ostringstream csv;
      csv << "R,level,cv,mc_se\n";
      for (const auto& row : table.rows) {
        for (int i = 0; i < 3; ++i) {
          csv << row.R << ',' << format_double(kTestLevels[i]) << ',' << format_double(row.values[i]) << ','
              << format_double(row.mc_se[i]) << '\n';
        }
      }
      if (cv_out.empty()) {
        out << csv.str();
      } else {
        write_text(cv_out, csv.str());
      }
      return 0;
    }

    if (pl->parsed()) {
      if (opt_deflator->count()) cfg.deflator = pl_deflator;
      if (opt_base->count()) cfg.base_period = pl_base;
      if (opt_pl_lower->count() != opt_pl_upper->count()) throw ConfigError("--grid-lower and --grid-upper go together");
      if (opt_pl_lower->count()) {
        cfg.grid_lower = pl_lower;
        cfg.grid_upper = pl_upper;
      }
      if (opt_pl_bw->count()) cfg.bandwidth = parse_bandwidth(pl_bw);
      if (cfg.output_dir.empty()) throw ConfigError("pipeline: --out (or output_dir) is required");
      PipelineReport report = run_pipeline(cfg);
      emit_outputs(report, cfg.output_dir);
      out << "selected dimension " << report.rank.selected << " at level " << cfg.level << '\n';
      return 0;
    }
    return 2;
  } catch (const InputError& e) {
    err << "input error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalFailure& e) {
    err << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 3;
  }
}

}  // namespace denscoint
