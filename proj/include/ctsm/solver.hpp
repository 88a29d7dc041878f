#pragma once

#include <cstdint>
#include <vector>

#include "ctsm/projector.hpp"

namespace ctsm {

struct SolveOptions {
  double lambda = 1e-4;   // Tikhonov weight
  int max_iter = 1000;
  double tol = 1e-9;      // stop when the squared gradient norm drops below this
};

struct SolveTraceRow {
  int iter;
  double objective;      // 0.5*||W u - p||^2 + 0.5*lambda*||u||^2
  double grad_norm_sq;   // ||W^T(W u - p) + lambda u||^2
};

struct SolveResult {
  std::vector<double> u;
  int iterations = 0;
  bool converged = false;
  std::vector<SolveTraceRow> trace;
};

// Minimizes 0.5*||W u - p||^2 + 0.5*lambda*||u||^2 with Nesterov's accelerated
// gradient method. The matrix is expected to be scaled so its spectral norm is
// 1; the gradient step uses the fixed Lipschitz constant L = 1 + lambda.
// Records a trace row per iteration when keep_trace is set.
SolveResult nag_tikhonov(const SparseSystemMatrix& w,
                         const std::vector<double>& p,
                         const SolveOptions& opt, bool keep_trace = false);

}  // namespace ctsm
