#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "denscoint/errors.hpp"
#include "denscoint/io.hpp"

using namespace denscoint;
using Eigen::MatrixXd;
using Eigen::VectorXd;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() / ("denscoint_io_" + std::to_string(std::random_device{}()));
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

}  // namespace

TEST(Io, FormatDoubleRoundTrips) {
  for (double v : {0.1, -1.0 / 3.0, 1e-300, 6.02214076e23, 0.0}) {
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
}

TEST(Io, GridJson) {
  TempDir d;
  Grid g(-2.5, 4.0, 77);
  write_grid_json(d.file("g.json"), g);
  Grid h = read_grid_json(d.file("g.json"));
  EXPECT_EQ(h.lower(), g.lower());
  EXPECT_EQ(h.upper(), g.upper());
  EXPECT_EQ(h.size(), g.size());
  EXPECT_THROW(grid_from_json(nlohmann::json{{"lower", 0}}), FormatError);
}

TEST(Io, FunctionCsvRoundTrip) {
  TempDir d;
  Grid g(-3, 3, 61);
  VectorXd v = g.nodes().array().sin();
  write_function_csv(d.file("f.csv"), g, v);
  auto [h, w] = read_function_csv(d.file("f.csv"));
  EXPECT_EQ(h.size(), 61);
  EXPECT_EQ(w, v);
  EXPECT_THROW(write_function_csv(d.file("bad.csv"), g, VectorXd::Zero(3)), DimensionError);
}

TEST(Io, FunctionCsvRejectsBadInput) {
  TempDir d;
  write_text(d.file("a.csv"), "x,y\n0,1\n1,2\n");
  EXPECT_THROW(read_function_csv(d.file("a.csv")), FormatError);
  write_text(d.file("b.csv"), "x,value\n0,1\n1,2\n3,4\n");
  EXPECT_THROW(read_function_csv(d.file("b.csv")), FormatError);
  write_text(d.file("c.csv"), "x,value\n0,1\n1,abc\n");
  EXPECT_THROW(read_function_csv(d.file("c.csv")), FormatError);
  EXPECT_THROW(read_function_csv(d.file("missing.csv")), FormatError);
}

TEST(Io, MatrixCsvRoundTrip) {
  TempDir d;
  Grid g(0, 1, 11);
  std::mt19937_64 eng(1);
  std::normal_distribution<double> n01;
  MatrixXd m(4, 11);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 11; ++j) m(i, j) = n01(eng);
  write_matrix_csv(d.file("m.csv"), g, m);
  GridMatrix r = read_matrix_csv(d.file("m.csv"));
  EXPECT_EQ(r.rows, m);
  EXPECT_EQ(r.grid.size(), 11);
  write_text(d.file("ragged.csv"), "0,0.5,1\n1,2,3\n4,5\n");
  EXPECT_THROW(read_matrix_csv(d.file("ragged.csv")), FormatError);
}

TEST(Io, LinearMapRoundTrip) {
  TempDir d;
  Grid g(-1, 1, 9);
  MatrixXd a = MatrixXd::Random(9, 9);
  write_linear_map(d.file("a.csv"), LinearMap(g, a));
  LinearMap b = read_linear_map(d.file("a.csv"));
  EXPECT_EQ(b.matrix(), a);
  EXPECT_EQ(b.grid().size(), 9);
}

TEST(Io, SamplesCsv) {
  TempDir d;
  write_text(d.file("s.csv"), "x,t,w\n1.5,1,2\n-0.5,1,1\n3,2,0.5\n");
  SampleRows r = read_samples_csv(d.file("s.csv"));
  EXPECT_EQ(r.t, (std::vector<int>{1, 1, 2}));
  EXPECT_EQ(r.x, (std::vector<double>{1.5, -0.5, 3.0}));
  EXPECT_EQ(r.w, (std::vector<double>{2.0, 1.0, 0.5}));

  write_text(d.file("nw.csv"), "t,x\n1,0.1\n");
  EXPECT_TRUE(read_samples_csv(d.file("nw.csv")).w.empty());
  write_text(d.file("neg.csv"), "t,x,w\n1,0.1,-1\n");
  EXPECT_THROW(read_samples_csv(d.file("neg.csv")), FormatError);
  write_text(d.file("frac.csv"), "t,x\n1.5,0.1\n");
  EXPECT_THROW(read_samples_csv(d.file("frac.csv")), FormatError);
  write_text(d.file("nox.csv"), "t,y\n1,0.1\n");
  EXPECT_THROW(read_samples_csv(d.file("nox.csv")), FormatError);
}

TEST(Io, DeflatorCsv) {
  TempDir d;
  write_text(d.file("d.csv"), "t,index\n1,100\n2,103.5\n");
  auto idx = read_deflator_csv(d.file("d.csv"));
  ASSERT_EQ(idx.size(), 2u);
  EXPECT_EQ(idx[1].first, 2);
  EXPECT_EQ(idx[1].second, 103.5);
  write_text(d.file("z.csv"), "t,index\n1,0\n");
  EXPECT_THROW(read_deflator_csv(d.file("z.csv")), FormatError);
}

TEST(Io, JsonErrors) {
  TempDir d;
  write_text(d.file("j.json"), "{not json");
  EXPECT_THROW(read_json(d.file("j.json")), FormatError);
  EXPECT_THROW(write_text("/nonexistent_dir_xyz/f.txt", "x"), FormatError);
}
