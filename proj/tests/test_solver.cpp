#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ctsm/oracle.hpp"
#include "ctsm/phantoms.hpp"
#include "ctsm/projector.hpp"
#include "ctsm/solver.hpp"
#include "test_util.hpp"

using namespace ctsm;

namespace {

SparseSystemMatrix identity_matrix(std::uint64_t n) {
  SparseSystemMatrix w;
  w.n_rows = w.n_cols = n;
  w.row_start.resize(n + 1);
  for (std::uint64_t i = 0; i <= n; ++i) w.row_start[i] = i;
  w.col.resize(n);
  for (std::uint64_t i = 0; i < n; ++i) w.col[i] = static_cast<std::uint32_t>(i);
  w.val.assign(n, 1.0);
  return w;
}

SparseSystemMatrix dense_random(std::uint64_t rows, std::uint64_t cols,
                                std::uint64_t seed) {
  SparseSystemMatrix w;
  w.n_rows = rows;
  w.n_cols = cols;
  w.row_start.resize(rows + 1);
  for (std::uint64_t r = 0; r <= rows; ++r) w.row_start[r] = r * cols;
  for (std::uint64_t r = 0; r < rows; ++r)
    for (std::uint64_t c = 0; c < cols; ++c)
      w.col.push_back(static_cast<std::uint32_t>(c));
  w.val = normal_samples(rows * cols, seed);
  return w;
}

}  // namespace

TEST_CASE("identity system has the closed-form minimizer p/(1+lambda)") {
  const SparseSystemMatrix w = identity_matrix(40);
  const std::vector<double> p = normal_samples(40, 5);
  SolveOptions opt;
  opt.lambda = 0.25;
  opt.max_iter = 5000;
  opt.tol = 1e-24;
  const SolveResult r = nag_tikhonov(w, p, opt);
  CHECK(r.converged);
  for (std::size_t i = 0; i < p.size(); ++i)
    CHECK(std::abs(r.u[i] - p[i] / 1.25) <= 1e-9);
}

TEST_CASE("solver matches the dense normal-equation oracle") {
  for (std::uint64_t seed : {11ull, 12ull}) {
    SparseSystemMatrix w = dense_random(15, 10, seed);
    const double norm = largest_singular_value_dense(to_dense(w));
    scale_values(&w, 1.0 / norm);
    const Eigen::MatrixXd dense = to_dense(w);
    const std::vector<double> p = normal_samples(15, seed + 100);
    SolveOptions opt;
    opt.lambda = 1e-2;
    opt.max_iter = 20000;
    opt.tol = 1e-26;
    const SolveResult r = nag_tikhonov(w, p, opt);
    const Eigen::VectorXd ref = solve_normal_equations(
        dense, Eigen::Map<const Eigen::VectorXd>(p.data(), 15), opt.lambda);
    double num = 0, den = 0;
    for (int i = 0; i < 10; ++i) {
      num += (r.u[i] - ref[i]) * (r.u[i] - ref[i]);
      den += ref[i] * ref[i];
    }
    CHECK(std::sqrt(num / den) <= 1e-6);
  }
}

TEST_CASE("trace records one row per iteration with decreasing objective") {
  SparseSystemMatrix w = dense_random(20, 12, 3);
  scale_values(&w, 1.0 / largest_singular_value_dense(to_dense(w)));
  const std::vector<double> p = normal_samples(20, 77);
  SolveOptions opt;
  opt.lambda = 1e-3;
  opt.max_iter = 50;
  opt.tol = 0.0;  // unreachable: always runs to max_iter
  const SolveResult r = nag_tikhonov(w, p, opt, true);
  CHECK(r.iterations == 50);
  CHECK_FALSE(r.converged);
  REQUIRE(r.trace.size() == 50);
  CHECK(r.trace.front().iter == 1);
  CHECK(r.trace.back().iter == 50);
  CHECK(r.trace.back().objective < r.trace.front().objective);

  opt.tol = 1e30;  // met immediately
  const SolveResult quick = nag_tikhonov(w, p, opt);
  CHECK(quick.converged);
  CHECK(quick.iterations == 1);
}

TEST_CASE("inputs are validated") {
  const SparseSystemMatrix w = identity_matrix(8);
  const std::vector<double> p(7);
  CHECK(error_code_of([&] { nag_tikhonov(w, p, SolveOptions{}); }) ==
        ErrorCode::DimensionMismatch);
  SolveOptions bad;
  bad.lambda = -1.0;
  CHECK(error_code_of([&] {
          nag_tikhonov(w, std::vector<double>(8), bad);
        }) == ErrorCode::InvalidConfig);
}
