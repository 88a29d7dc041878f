#include "ctsm/solver.hpp"

#include <cmath>

namespace ctsm {

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

SolveResult nag_tikhonov(const SparseSystemMatrix& w,
                         const std::vector<double>& p,
                         const SolveOptions& opt, bool keep_trace) {
  if (p.size() != w.n_rows)
    fail(ErrorCode::DimensionMismatch, "data size does not match matrix rows");
  if (!(opt.lambda >= 0.0) || !(opt.tol >= 0.0) || opt.max_iter < 0)
    fail(ErrorCode::InvalidConfig, "solver options must be nonnegative");

  const std::size_t n = w.n_cols;
  const double lam = opt.lambda;
  const double L = 1.0 + lam;
  const std::vector<double> q = back_project(w, p);

  SolveResult res;
  res.u.assign(n, 0.0);
  std::vector<double> u_prev(n, 0.0);
  // h = W^T W u for the current and previous iterate; v = W u for the current.
  std::vector<double> h(n, 0.0), h_prev(n, 0.0), v(w.n_rows, 0.0);
  std::vector<double> y(n), grad(n);
  double t = 1.0;

  for (int it = 0; it < opt.max_iter; ++it) {
    const double t_next = (1.0 + std::sqrt(1.0 + 4.0 * t * t)) / 2.0;
    const double m = (t - 1.0) / t_next;
    // y = (1+m) u - m u_prev, so W^T W y = (1+m) h - m h_prev by linearity.
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = (1.0 + m) * res.u[i] - m * u_prev[i];
      grad[i] = (1.0 + m) * (h[i] + lam * res.u[i]) -
                m * (h_prev[i] + lam * u_prev[i]) - q[i];
    }
    u_prev = res.u;
    h_prev = h;
    for (std::size_t i = 0; i < n; ++i) res.u[i] = y[i] - grad[i] / L;
    t = t_next;

    v = forward_project(w, res.u);
    h = back_project(w, v);
    double grad_sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double gi = h[i] + lam * res.u[i] - q[i];
      grad_sq += gi * gi;
    }
    res.iterations = it + 1;
    if (keep_trace) {
      double resid_sq = 0.0;
      for (std::size_t r = 0; r < w.n_rows; ++r)
        resid_sq += (v[r] - p[r]) * (v[r] - p[r]);
      res.trace.push_back(
          {it + 1, 0.5 * resid_sq + 0.5 * lam * dot(res.u, res.u), grad_sq});
    }
    if (!std::isfinite(grad_sq))
      fail(ErrorCode::NonFinite, "solver iterate diverged");
    if (grad_sq < opt.tol) {
      res.converged = true;
      break;
    }
  }
  return res;
}

}  // namespace ctsm
