#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ctsm/oracle.hpp"
#include "ctsm/projector.hpp"
#include "test_util.hpp"

using namespace ctsm;

TEST_CASE("clipping reference: symmetry and totals") {
  const double s = 250, d = 250, dy = 2.0;
  // pixel symmetric about y=0, gantry at phi=0: mirror cells get equal areas
  for (int cell = 0; cell < 4; ++cell) {
    const double w_pos = clip_area_2d(-1, 1, -1, 1, 0.0, s, d, dy, cell);
    const double w_neg = clip_area_2d(-1, 1, -1, 1, 0.0, s, d, dy, -1 - cell);
    CHECK(w_pos == doctest::Approx(w_neg).epsilon(1e-12));
  }
  double total = 0;
  for (int cell = -8; cell < 8; ++cell)
    total += clip_area_2d(-1, 1, -1, 1, 0.0, s, d, dy, cell);
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  // a far-away cell sees nothing
  CHECK(clip_area_2d(-1, 1, -1, 1, 0.0, s, d, dy, 40) == 0.0);
}

TEST_CASE("gauss-legendre nodes integrate high-degree polynomials") {
  const auto [x, w] = gauss_legendre(5);
  REQUIRE(x.size() == 5);
  double sum_w = 0, integral = 0;
  for (std::size_t i = 0; i < 5; ++i) {
    sum_w += w[i];
    integral += w[i] * std::pow(x[i], 8);
    CHECK(x[i] == doctest::Approx(-x[4 - i]).epsilon(1e-13));
  }
  CHECK(sum_w == doctest::Approx(2.0).epsilon(1e-14));
  // k = 5 is exact for degree 9: int_{-1}^{1} x^8 dx = 2/9
  CHECK(integral == doctest::Approx(2.0 / 9.0).epsilon(1e-13));
}

TEST_CASE("monte carlo volume is deterministic and sane") {
  const double s = 300, d = 150, dy = 2.5, dz = 1.5;
  const McEstimate a =
      mc_volume_3d(2, 7, -4, 1, 3, 8, 0.6, s, d, dy, dz, 0, 2, 200000, 42);
  const McEstimate b =
      mc_volume_3d(2, 7, -4, 1, 3, 8, 0.6, s, d, dy, dz, 0, 2, 200000, 42);
  CHECK(a.value == b.value);
  CHECK(a.std_err == b.std_err);
  CHECK(a.value >= 0.0);
  CHECK(a.value <= 1.0);
  CHECK(a.std_err > 0.0);
}

TEST_CASE("monte carlo and dense ray integration agree") {
  const double s = 300, d = 150, dy = 2.5, dz = 1.5;
  for (int m_y : {-2, 0, 3}) {
    const double gl =
        multiline_volume_3d(2, 7, -4, 1, 3, 8, 0.6, s, d, dy, dz, m_y, 2, 120);
    const McEstimate mc =
        mc_volume_3d(2, 7, -4, 1, 3, 8, 0.6, s, d, dy, dz, m_y, 2, 400000, 7);
    CHECK(std::abs(gl - mc.value) < 4 * mc.std_err + 1e-4);
  }
}

TEST_CASE("dense helpers reproduce small closed-form systems") {
  // W = [[2, 0], [0, 1], [1, 1]] from a hand-built CSR container
  SparseSystemMatrix w;
  w.n_rows = 3;
  w.n_cols = 2;
  w.row_start = {0, 1, 2, 4};
  w.col = {0, 1, 0, 1};
  w.val = {2, 1, 1, 1};
  const Eigen::MatrixXd dm = to_dense(w);
  REQUIRE(dm.rows() == 3);
  REQUIRE(dm.cols() == 2);
  CHECK(dm(0, 0) == 2.0);
  CHECK(dm(2, 1) == 1.0);
  CHECK(dm(0, 1) == 0.0);
  // largest singular value of W: sqrt of max eigenvalue of W^T W = [[5,1],[1,2]]
  const double expect = std::sqrt((7 + std::sqrt(13.0)) / 2);
  CHECK(largest_singular_value_dense(dm) ==
        doctest::Approx(expect).epsilon(1e-12));
  // normal equations with lambda = 0.5 against an explicit 2x2 solve
  Eigen::VectorXd p(3);
  p << 1, 2, 3;
  const Eigen::VectorXd u = solve_normal_equations(dm, p, 0.5);
  const Eigen::MatrixXd lhs =
      dm.transpose() * dm + 0.5 * Eigen::MatrixXd::Identity(2, 2);
  const Eigen::VectorXd expect_u = lhs.inverse() * (dm.transpose() * p);
  CHECK((u - expect_u).norm() < 1e-12);

  CHECK(error_code_of([&] { to_dense(w, 3); }) == ErrorCode::TooLarge);
}

TEST_CASE("power iteration matches the dense singular value") {
  SparseSystemMatrix w;
  w.n_rows = 3;
  w.n_cols = 2;
  w.row_start = {0, 1, 2, 4};
  w.col = {0, 1, 0, 1};
  w.val = {2, 1, 1, 1};
  const double dense = largest_singular_value_dense(to_dense(w));
  CHECK(spectral_norm_power(w, 200, 7) ==
        doctest::Approx(dense).epsilon(1e-10));
}
