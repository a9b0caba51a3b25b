#pragma once

// End-to-end processing of repeated cross sections:
// ingest -> deflate -> truncate -> common grid -> per-period log-density
// estimation -> clr series -> FPCA -> sequential rank test -> attractor report.

#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "denscoint/grid_space.hpp"
#include "denscoint/io.hpp"
#include "denscoint/logdensity.hpp"
#include "denscoint/rank_test.hpp"

namespace denscoint {

inline constexpr const char* kReportSchema = "denscoint.report/1";

struct PipelineConfig {
  std::string input;
  std::optional<std::string> deflator;
  /// Defaults to the first period.
  std::optional<int> base_period;
  double truncate_lower = 2.5;
  double truncate_upper = 97.5;
  int grid_n = 601;
  /// Explicit support; when absent the pooled weighted
  /// [truncate_lower, truncate_upper] band padded by `grid_padding` of its
  /// width on each side is used. Observations outside the support are dropped.
  std::optional<double> grid_lower;
  std::optional<double> grid_upper;
  double grid_padding = 0.01;
  /// "pooled" (the band above) or "intersection" (the largest interval
  /// covered by every truncated period, no padding). Ignored with an
  /// explicit support.
  std::string grid_rule = "pooled";
  int mesh = 101;
  /// Fixed bandwidth; GBIC selection when absent.
  std::optional<double> bandwidth;
  int r_max = 5;
  double level = 0.05;
  /// "builtin" or "simulate".
  std::string critical_values = "builtin";
  int cv_paths = 100000;
  int cv_steps = 2000;
  bool demeaned = true;
  double perturbation_scale = 1.0;
  int eigen_count = 25;
  std::uint64_t seed = 0;
  std::string output_dir;

  void validate() const;
  nlohmann::json to_json() const;
  /// Unknown keys are rejected with ConfigError.
  static PipelineConfig from_json(const nlohmann::json& j);
};

/// Cross sections from a t,x[,w] file, one per period, in period order.
/// Periods must be contiguous integers and none may be empty.
std::vector<CrossSection> ingest(const std::string& path);
std::vector<CrossSection> ingest_rows(const SampleRows& rows);

/// Multiplies period t's values by index(base) / index(t).
std::vector<CrossSection> deflate(const std::vector<CrossSection>& sections,
                                  const std::vector<std::pair<int, double>>& index, std::optional<int> base_period);

/// Keeps observations inside the closed weighted [lower, upper] percentile
/// band and renormalizes the weights.
CrossSection percentile_truncate(const CrossSection& cs, double lower, double upper);

/// Weighted [lower, upper] percentile band of the pooled data, padded by
/// `padding` of its width on each side.
Grid common_grid(const std::vector<CrossSection>& sections, int n, double lower, double upper, double padding);

/// [max_t min X_t, min_t max X_t] over the periods. Throws DegenerateData when
/// the period ranges do not overlap.
Grid intersection_grid(const std::vector<CrossSection>& sections, int n);

/// Drops observations outside the grid's interval and renormalizes weights.
CrossSection restrict_to(const CrossSection& cs, const Grid& grid);

/// n draws from a grid density by inversion of its piecewise-linear CDF.
Eigen::VectorXd sample_density(const Density& f, int n, std::mt19937_64& engine);

struct PeriodSummary {
  int period;
  int raw_count;
  int kept_count;
  double bandwidth;
  /// [q99 - q1] n^{-1/5}; zero when the bandwidth was fixed.
  double reference_bandwidth;
  /// Times the GBIC range had to be scaled up by 1.25 (see select_bandwidth_widening).
  int bandwidth_widenings;
  double mean;
  double sd;
};

struct PipelineReport {
  PipelineConfig config;
  Grid grid = Grid::standard();
  std::vector<PeriodSummary> periods;
  Eigen::MatrixXd densities;  // T x n
  Eigen::MatrixXd clr;        // T x n
  RankTestReport rank;
  CriticalValueTable critical_values;
  /// n x r_hat, W-orthonormal columns.
  Eigen::MatrixXd attractor_basis;
  double zeta1 = 0.0;
  Eigen::VectorXd stationary_mean;  // density
  Eigen::VectorXd perturbed_plus;   // density
  Eigen::VectorXd perturbed_minus;  // density

  nlohmann::json to_json() const;
};

/// Decisions, statistics and critical-value provenance of a rank test.
nlohmann::json rank_report_json(const RankTestReport& rank, const CriticalValueTable& table);

PipelineReport run_pipeline(const PipelineConfig& config);
/// Runs on cross sections already in memory (ingest and deflation skipped).
PipelineReport run_pipeline(const PipelineConfig& config, const std::vector<CrossSection>& sections);

/// Writes density_matrix.csv, clr_matrix.csv, scree.csv, tau_table.csv,
/// attractor_basis.csv, perturbations.csv and report.json into `dir`.
void emit_outputs(const PipelineReport& report, const std::string& dir);

}  // namespace denscoint
