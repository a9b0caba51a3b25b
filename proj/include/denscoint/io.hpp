#pragma once

// File formats:
//   function CSV      header "x,value", one node per row
//   grid JSON         {"lower": a, "upper": b, "n": n}
//   matrix CSV        first row the grid nodes, then one row per period
//   linear map CSV    n x n nodal matrix with a "<path>.json" grid sidecar
//   samples CSV       header with columns t, x and optionally w

#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "denscoint/grid_space.hpp"
#include "denscoint/operators.hpp"

namespace denscoint {

/// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

nlohmann::json grid_to_json(const Grid& grid);
Grid grid_from_json(const nlohmann::json& j);
void write_grid_json(const std::string& path, const Grid& grid);
Grid read_grid_json(const std::string& path);

void write_function_csv(const std::string& path, const Grid& grid, const Eigen::VectorXd& values);
/// Recovers the grid from the node column; throws FormatError unless the nodes
/// are equally spaced.
std::pair<Grid, Eigen::VectorXd> read_function_csv(const std::string& path);

struct GridMatrix {
  Grid grid;
  Eigen::MatrixXd rows;
};
void write_matrix_csv(const std::string& path, const Grid& grid, const Eigen::MatrixXd& rows);
GridMatrix read_matrix_csv(const std::string& path);

void write_linear_map(const std::string& path, const LinearMap& map);
LinearMap read_linear_map(const std::string& path);

struct SampleRows {
  std::vector<int> t;
  std::vector<double> x;
  std::vector<double> w;  // empty when the file has no weight column
};
SampleRows read_samples_csv(const std::string& path);

/// Two-column CSV "t,index".
std::vector<std::pair<int, double>> read_deflator_csv(const std::string& path);

void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);
nlohmann::json read_json(const std::string& path);

}  // namespace denscoint
