#include "denscoint/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "denscoint/errors.hpp"

namespace denscoint {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::json;

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s, const std::string& path, std::size_t line) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) {
    throw FormatError(path + ":" + std::to_string(line) + ": cannot parse number '" + s + "'");
  }
  return v;
}

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    rows.push_back(split(line));
  }
  return rows;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path);
  return out;
}

Grid grid_from_nodes(const VectorXd& nodes, const std::string& path) {
  if (nodes.size() < 2) throw FormatError(path + ": at least two grid nodes required");
  const int n = static_cast<int>(nodes.size());
  Grid grid(nodes[0], nodes[n - 1], n);
  double tol = 1e-9 * grid.measure();
  if ((grid.nodes() - nodes).cwiseAbs().maxCoeff() > tol) throw FormatError(path + ": grid nodes are not equally spaced");
  return grid;
}

}  // namespace

json grid_to_json(const Grid& grid) { return json{{"lower", grid.lower()}, {"upper", grid.upper()}, {"n", grid.size()}}; }

Grid grid_from_json(const json& j) {
  try {
    return Grid(j.at("lower").get<double>(), j.at("upper").get<double>(), j.at("n").get<int>());
  } catch (const json::exception& e) {
    throw FormatError(std::string("grid metadata: ") + e.what());
  }
}

void write_grid_json(const std::string& path, const Grid& grid) { write_text(path, grid_to_json(grid).dump(2) + "\n"); }

Grid read_grid_json(const std::string& path) { return grid_from_json(read_json(path)); }

void write_function_csv(const std::string& path, const Grid& grid, const VectorXd& values) {
  if (values.size() != grid.size()) throw DimensionError("write_function_csv: length does not match the grid");
  auto out = open_out(path);
  out << "x,value\n";
  for (int i = 0; i < grid.size(); ++i) out << format_double(grid.nodes()[i]) << ',' << format_double(values[i]) << '\n';
}

std::pair<Grid, VectorXd> read_function_csv(const std::string& path) {
  auto rows = read_csv(path);
  if (rows.empty() || rows[0].size() != 2 || rows[0][0] != "x" || rows[0][1] != "value") {
    throw FormatError(path + ": expected header x,value");
  }
  VectorXd x(static_cast<Eigen::Index>(rows.size() - 1));
  VectorXd v(x.size());
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != 2) throw FormatError(path + ":" + std::to_string(r + 1) + ": expected two columns");
    x[static_cast<Eigen::Index>(r - 1)] = parse_double(rows[r][0], path, r + 1);
    v[static_cast<Eigen::Index>(r - 1)] = parse_double(rows[r][1], path, r + 1);
  }
  return {grid_from_nodes(x, path), v};
}

void write_matrix_csv(const std::string& path, const Grid& grid, const MatrixXd& rows) {
  if (rows.cols() != grid.size()) throw DimensionError("write_matrix_csv: row length does not match the grid");
  auto out = open_out(path);
  auto emit = [&](const auto& row) {
    for (Eigen::Index i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      out << format_double(row[i]);
    }
    out << '\n';
  };
  emit(grid.nodes());
  for (Eigen::Index t = 0; t < rows.rows(); ++t) emit(rows.row(t));
}

GridMatrix read_matrix_csv(const std::string& path) {
  auto rows = read_csv(path);
  if (rows.size() < 2) throw FormatError(path + ": expected a node row and at least one data row");
  const std::size_t n = rows[0].size();
  VectorXd nodes(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) nodes[static_cast<Eigen::Index>(i)] = parse_double(rows[0][i], path, 1);
  MatrixXd m(static_cast<Eigen::Index>(rows.size() - 1), static_cast<Eigen::Index>(n));
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != n) throw FormatError(path + ":" + std::to_string(r + 1) + ": wrong number of columns");
    for (std::size_t i = 0; i < n; ++i) {
      m(static_cast<Eigen::Index>(r - 1), static_cast<Eigen::Index>(i)) = parse_double(rows[r][i], path, r + 1);
    }
  }
  return GridMatrix{grid_from_nodes(nodes, path), std::move(m)};
}

void write_linear_map(const std::string& path, const LinearMap& map) {
  auto out = open_out(path);
  const MatrixXd& a = map.matrix();
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    for (Eigen::Index c = 0; c < a.cols(); ++c) {
      if (c) out << ',';
      out << format_double(a(r, c));
    }
    out << '\n';
  }
  write_grid_json(path + ".json", map.grid());
}

LinearMap read_linear_map(const std::string& path) {
  Grid grid = read_grid_json(path + ".json");
  auto rows = read_csv(path);
  const auto n = static_cast<std::size_t>(grid.size());
  if (rows.size() != n) throw FormatError(path + ": expected " + std::to_string(n) + " rows");
  MatrixXd a(grid.size(), grid.size());
  for (std::size_t r = 0; r < n; ++r) {
    if (rows[r].size() != n) throw FormatError(path + ":" + std::to_string(r + 1) + ": wrong number of columns");
    for (std::size_t c = 0; c < n; ++c) {
      a(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = parse_double(rows[r][c], path, r + 1);
    }
  }
  return LinearMap(grid, std::move(a));
}

SampleRows read_samples_csv(const std::string& path) {
  auto rows = read_csv(path);
  if (rows.empty()) throw FormatError(path + ": empty file");
  int ct = -1, cx = -1, cw = -1;
  for (std::size_t i = 0; i < rows[0].size(); ++i) {
    if (rows[0][i] == "t") ct = static_cast<int>(i);
    if (rows[0][i] == "x") cx = static_cast<int>(i);
    if (rows[0][i] == "w") cw = static_cast<int>(i);
  }
  if (ct < 0 || cx < 0) throw FormatError(path + ": missing column t or x");
  SampleRows out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != rows[0].size()) throw FormatError(path + ":" + std::to_string(r + 1) + ": wrong number of columns");
    double t = parse_double(row[static_cast<std::size_t>(ct)], path, r + 1);
    if (t != std::floor(t)) throw FormatError(path + ":" + std::to_string(r + 1) + ": period must be an integer");
    out.t.push_back(static_cast<int>(t));
    out.x.push_back(parse_double(row[static_cast<std::size_t>(cx)], path, r + 1));
    if (cw >= 0) {
      double w = parse_double(row[static_cast<std::size_t>(cw)], path, r + 1);
      if (!(w > 0.0)) throw FormatError(path + ":" + std::to_string(r + 1) + ": weights must be positive");
      out.w.push_back(w);
    }
  }
  return out;
}

std::vector<std::pair<int, double>> read_deflator_csv(const std::string& path) {
  auto rows = read_csv(path);
  if (rows.empty() || rows[0].size() != 2 || rows[0][0] != "t" || rows[0][1] != "index") {
    throw FormatError(path + ": expected header t,index");
  }
  std::vector<std::pair<int, double>> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != 2) throw FormatError(path + ":" + std::to_string(r + 1) + ": expected two columns");
    double t = parse_double(rows[r][0], path, r + 1);
    double idx = parse_double(rows[r][1], path, r + 1);
    if (t != std::floor(t)) throw FormatError(path + ":" + std::to_string(r + 1) + ": period must be an integer");
    if (!(idx > 0.0)) throw FormatError(path + ":" + std::to_string(r + 1) + ": index must be positive");
    out.emplace_back(static_cast<int>(t), idx);
  }
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
  if (!out) throw FormatError("failed writing " + path);
}

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json(const std::string& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw FormatError(path + ": " + e.what());
  }
}

}  // namespace denscoint
