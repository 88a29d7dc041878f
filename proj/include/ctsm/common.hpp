#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace ctsm {

// Stable error taxonomy. Every failure raised by the library carries one of
// these codes so callers (CLI, tests) can map them to process exit codes.
enum class ErrorCode {
  DegenerateGeometry,     // source on/inside the grid, no canonical quadrant, ...
  RayParallelToFace,      // a requested relation divides by cos/sin(phi-beta) ~ 0
  SingularPhi,            // formula requested outside its |sin phi| validity range
  CentralRow,             // row-edge index 0 requested where tan(alpha)=0 is invalid
  ZRestrictionViolation,  // a voxel projects onto more detector rows than allowed
  DimensionMismatch,      // operand sizes disagree
  NonFinite,              // NaN/Inf encountered or internal consistency check failed
  ZeroMatrix,             // assembled system matrix has no entries
  TooLarge,               // object exceeds implementation limits (e.g. 2^32 columns)
  InvalidSpec,            // invalid geometry/parameter specification
  OutOfMemory,            // predicted allocation exceeds the memory budget
  InvalidConfig,          // malformed or unknown configuration input
  IoFailure,              // file could not be read/written
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

// Numeric guards shared by the weight formulas. All are dimensionless unless
// noted; denominator guards scale with the source distance s.
inline constexpr double k_eps_den_rel = 1e-12;   // depth denominator guard, x s
inline constexpr double k_eps_angle = 1e-12;     // angular denominators
inline constexpr double k_eps_singular = 1e-8;   // |sin phi| below -> flat-source branch
inline constexpr double k_eps_piece = 1e-15;     // minimum angular width of a sweep piece
inline constexpr double k_eps_weight = 1e-16;    // weights below this are dropped
inline constexpr double k_neg_clamp_2d = -1e-14; // allowed FP undershoot of a 2D weight
// Volume cells are differences of stacked-plane integrals whose terms carry a
// cube of (depth / in-plane pitch) -- about 1e5..1e6 in realistic cone-beam
// scans -- so legitimate cancellation residue reaches ~1e-10. Anything beyond
// this guard indicates a wrong branch, which misses by the weight scale itself.
inline constexpr double k_neg_clamp_3d = -1e-9;  // allowed FP undershoot of a residual volume
inline constexpr double k_canon_slack = 1e-13;   // corner-ordering acceptance slack

inline double sq(double v) { return v * v; }
inline double cube(double v) { return v * v * v; }

}  // namespace ctsm
