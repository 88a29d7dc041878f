#pragma once

#include <vector>

#include "ctsm/geometry.hpp"

namespace ctsm {

// Relative area of the corner triangle cut from an a x b pixel at the vertex
// with fan angle gamma_far by the ray at angle beta (gamma_near is the angle
// of the other vertex on the same pixel face). Zero at beta == gamma_far and
// grows toward the opposite zone boundary. Canonical orientation assumed.
double triangle_area_factor(double phi, double gamma_far, double gamma_near,
                            double beta, double a, double b);

// Relative area of the band between the rays at beta_lo and beta_hi when both
// rays cross both x-faces of the pixel with index n_x (faces at n_x * a and
// (n_x + 1) * a; n_x may be fractional for a centered grid). Canonical
// orientation assumed.
double trapezoid_area_factor(double phi, double n_x, double beta_lo,
                             double beta_hi, const ScanGeometry& g);

struct CellWeight {
  int m_y = 0;  // centered detector cell index
  double w = 0; // pixel-area fraction, in (0, 1]
};

// All nonzero area fractions of pixel n under the fan at angle phi, keyed by
// detector cell, ascending in m_y and clipped to the physical detector.
// Weights sum to 1 when the pixel's angular support is fully covered.
std::vector<CellWeight> pixel_area_factors(const VoxelIndex& n, double phi,
                                           const ScanGeometry& g);

namespace detail {

// One angular piece of a pixel sweep: the wedge [b_lo, b_hi] lies inside a
// single detector cell and inside a single case zone of the pixel.
struct SweepPiece {
  int cell = 0;      // detector cell index (centered)
  int kind = 0;      // 0: lower corner triangle, 1: x-face band, 2: upper corner triangle
  double apex_x = 0; // triangle corner for kinds 0/2
  double apex_y = 0;
  double b_lo = 0, b_hi = 0;
};

// Breakdown of a pixel's angular support into pieces, in the canonical frame.
struct StripSweep {
  Frame2D f;                      // canonical frame (faces + rotated phi)
  double G1 = 0, G2 = 0, G3 = 0, G4 = 0;  // sorted corner angles
  std::vector<SweepPiece> pieces; // ascending in angle
};

StripSweep strip_sweep(double x0, double x1, double y0, double y1, double phi,
                       double s, double d, double d_y);

// Area fraction of one sweep piece (cumulative triangle differences for the
// corner zones, closed band form in the middle zone).
double piece_area(const StripSweep& sw, const SweepPiece& p, double s);

}  // namespace detail

}  // namespace ctsm
