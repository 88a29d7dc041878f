#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ctsm/oracle.hpp"
#include "ctsm/phantoms.hpp"
#include "ctsm/projector.hpp"
#include "test_util.hpp"

using namespace ctsm;

namespace {

ScanGeometry small_scan(bool three_d) {
  ScanGeometry g;
  g.s = 250;
  g.d = 250;
  g.d_y = 1.5;
  g.n_det_y = 44;  // wide enough that every pixel's fan support is covered
  g.n_angles = 6;
  g.a = g.b = 1.5;
  g.n_x = g.n_y = 12;
  if (three_d) {
    g.d_z = 1.5;
    g.n_det_z = 12;
    g.c = 1.5;
    g.n_z = 12;
  }
  g.validate();
  return g;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

TEST_CASE("matrix mode parsing") {
  int k = 0;
  CHECK(parse_matrix_mode("consistent", &k) == MatrixMode::consistent);
  CHECK(parse_matrix_mode("line", &k) == MatrixMode::line);
  CHECK(parse_matrix_mode("multiline:8", &k) == MatrixMode::multiline);
  CHECK(k == 8);
  CHECK(matrix_mode_name(MatrixMode::multiline, 8) == "multiline:8");
  CHECK(error_code_of([&] { parse_matrix_mode("area", &k); }) ==
        ErrorCode::InvalidConfig);
  CHECK(error_code_of([&] { parse_matrix_mode("multiline:0", &k); }) ==
        ErrorCode::InvalidConfig);
}

TEST_CASE("assembled matrix has sane structure") {
  const ScanGeometry g = small_scan(false);
  const SparseSystemMatrix w = build_system_matrix(g, MatrixMode::consistent);
  CHECK(w.n_rows == g.n_measurements());
  CHECK(w.n_cols == g.n_voxels());
  REQUIRE(w.row_start.size() == w.n_rows + 1);
  CHECK(w.row_start[0] == 0);
  CHECK(w.row_start[w.n_rows] == w.nnz());
  for (std::uint64_t r = 0; r < w.n_rows; ++r)
    for (std::uint64_t j = w.row_start[r] + 1; j < w.row_start[r + 1]; ++j)
      CHECK(w.col[j - 1] < w.col[j]);  // strictly ascending columns per row
  CHECK(w.meta.find("mode=consistent") != std::string::npos);
  CHECK(w.meta.find("nx=12") != std::string::npos);
}

TEST_CASE("assembly is deterministic in the thread count") {
  const ScanGeometry g = small_scan(true);
  for (const MatrixMode mode : {MatrixMode::consistent, MatrixMode::line}) {
    const SparseSystemMatrix w1 = build_system_matrix(g, mode, 1, 1);
    const SparseSystemMatrix w3 = build_system_matrix(g, mode, 1, 3);
    CHECK(w1.row_start == w3.row_start);
    CHECK(w1.col == w3.col);
    CHECK(w1.val == w3.val);
  }
}

TEST_CASE("forward and adjoint are transposes of each other") {
  for (bool three_d : {false, true}) {
    const ScanGeometry g = small_scan(three_d);
    const SparseSystemMatrix w = build_system_matrix(g, MatrixMode::consistent);
    const std::vector<double> x = normal_samples(w.n_cols, 31);
    const std::vector<double> y = normal_samples(w.n_rows, 32);
    const double lhs = dot(forward_project(w, x), y);
    const double rhs = dot(x, back_project(w, y));
    CHECK(std::abs(lhs - rhs) <= 1e-13 * std::abs(lhs));
  }
}

TEST_CASE("dimension mismatches are rejected") {
  const ScanGeometry g = small_scan(false);
  const SparseSystemMatrix w = build_system_matrix(g, MatrixMode::line);
  CHECK(error_code_of([&] {
          forward_project(w, std::vector<double>(w.n_cols + 1));
        }) == ErrorCode::DimensionMismatch);
  CHECK(error_code_of([&] {
          back_project(w, std::vector<double>(w.n_rows - 1));
        }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("matrix-free forward projection matches the stored matrix") {
  const ScanGeometry g = small_scan(true);
  for (const MatrixMode mode : {MatrixMode::consistent, MatrixMode::line}) {
    const SparseSystemMatrix w = build_system_matrix(g, mode);
    const std::vector<double> x = normal_samples(w.n_cols, 33);
    const std::vector<double> y0 = forward_project(w, x);
    const std::vector<double> y1 = forward_project_matrix_free(g, mode, 1, x, 2);
    REQUIRE(y0.size() == y1.size());
    double max_diff = 0, max_val = 0;
    for (std::size_t i = 0; i < y0.size(); ++i) {
      max_diff = std::max(max_diff, std::abs(y0[i] - y1[i]));
      max_val = std::max(max_val, std::abs(y0[i]));
    }
    CHECK(max_diff <= 1e-12 * std::max(1.0, max_val));
  }
}

TEST_CASE("per-angle column sums never exceed one pixel/voxel") {
  const ScanGeometry g = small_scan(false);
  const std::vector<double> sums =
      angle_column_sums(g, MatrixMode::consistent, 1, 2);
  double max_sum = 0, min_sum = 2;
  for (double s : sums) {
    max_sum = std::max(max_sum, s);
    min_sum = std::min(min_sum, s);
  }
  CHECK(max_sum <= 1.0 + 1e-9);
  CHECK(min_sum >= 0.99);  // detector wide enough: every pixel fully covered
}

TEST_CASE("spectral norm matches the dense value on a small system") {
  const ScanGeometry g = small_scan(false);
  SparseSystemMatrix w = build_system_matrix(g, MatrixMode::consistent);
  const double dense = largest_singular_value_dense(to_dense(w));
  const double power = spectral_norm_power(w, 150, 7);
  CHECK(power == doctest::Approx(dense).epsilon(1e-8));
  scale_values(&w, 1.0 / power);
  CHECK(spectral_norm_power(w, 150, 7) == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("memory budget and size limits are enforced") {
  const ScanGeometry g = small_scan(true);
  CHECK(error_code_of([&] {
          build_system_matrix(g, MatrixMode::consistent, 1, 1, 1024);
        }) == ErrorCode::OutOfMemory);
  ScanGeometry huge = small_scan(true);
  huge.n_x = huge.n_y = huge.n_z = 2048;  // 2^33 voxels
  huge.a = huge.b = huge.c = 0.01;
  CHECK(error_code_of([&] {
          build_system_matrix(huge, MatrixMode::consistent);
        }) == ErrorCode::TooLarge);
}
