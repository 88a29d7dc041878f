#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ctsm {

// Randomized cross-validation harnesses. Each suite draws seeded random
// configurations, evaluates the closed-form weights and an independent
// reference, and reports the worst error observed.
//
// Error normalization per suite:
//   weights2d   |w - w_ref| / max(1, w)          vs the polygon-clipping area
//   partition*  |sum(w) - 1|
//   weights3d   max(|w - mc| / (3 se), |w - gl| / gl_abs_tol); 1.0 is the bound
//   identities  relative deviation between paired closed forms
//   singular    relative gap between the flat-source branch and the phi -> 0
//               extrapolation of two nudged regular-branch evaluations
//   adjoint     |<Wx,y> - <x,W^T y>| relative to |<Wx,y>|
struct SuiteReport {
  std::string suite;
  int cases = 0;              // sampled configurations
  long long comparisons = 0;  // individual comparisons inside all cases
  int geometries = 0;         // distinct geometries drawn
  double max_err = 0.0;
  double tol = 0.0;           // suggested pass threshold
  int trap_patterns = 0;      // distinct branch patterns observed (3D suites)
  int tri_patterns = 0;
  std::vector<double> errors;  // one entry per case
  bool pass() const { return cases > 0 && max_err <= tol; }
};

SuiteReport check_weights2d_oracle(int samples, std::uint64_t seed);
SuiteReport check_partition_2d(int samples, std::uint64_t seed);
SuiteReport check_partition_3d(int samples, std::uint64_t seed);

// Also keeps sampling (weights only, no reference) past `samples` until every
// realizable branch pattern has appeared, so pattern coverage is reported.
SuiteReport check_weights3d_oracle(int samples, std::uint64_t seed,
                                   std::uint64_t mc_samples = 1000000,
                                   int gl_k = 200, double gl_abs_tol = 1e-4);

SuiteReport check_identities(int samples, std::uint64_t seed);
SuiteReport check_singular_continuity(int samples, std::uint64_t seed);
SuiteReport check_adjoint(int pairs, std::uint64_t seed, bool three_d);

}  // namespace ctsm
