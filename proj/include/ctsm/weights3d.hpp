#pragma once

#include <array>
#include <set>
#include <vector>

#include "ctsm/geometry.hpp"
#include "ctsm/weights2d.hpp"

namespace ctsm {

// The four cone-beam case factors of a voxel with respect to the ray
// (beta_{m_y}, row edge m_z), evaluated in the canonical frame:
//   g:   front x-face factor (face (n_x+1) a after canonicalization)
//   f:   rear x-face factor (face n_x a)
//   h:   y-face factor (face n_y b)
//   g_g: corner factor at ((n_x+1) a, n_y b)
// All are affine distances measured against the apex height (n_z+1) c in
// units of a * tan(alpha). Each is evaluated through its raw-coordinate form
// and (when the corner-angle denominators are well conditioned) through its
// angle-substituted form; the two must agree to 1e-12.
struct FactorTriple {
  double g = 0, f = 0, h = 0, g_g = 0;
  double tan_alpha = 0;  // m_z d_z / (s + d)
  double beta = 0;       // fan angle of edge m_y
  double crg = 0;        // cos(phi - beta) / cos(beta)
  double srh = 0;        // sin(phi - beta) / cos(beta)
  double phi = 0;        // canonical frame angle
  double a = 0;          // pixel size (canonical frame has a == b footprint sizes swapped)
};

FactorTriple factors(int m_y, int m_z, const VoxelIndex& n, double phi,
                     const ScanGeometry& g);

// Absolute volume of the corner tetrahedron cut by the row-edge plane when
// the plane crosses only the front (front_face = true, factor g) or rear
// (factor f) x-face edge of the voxel top. Requires |sin phi| above the
// flat-source threshold.
double tetra_volume(const FactorTriple& t, bool front_face);

// Branch-selection coefficients: each entry is 1 when the corresponding
// linear factor is positive (the plane actually cuts below the apex on that
// edge) and 0 otherwise. Factors exactly at zero count as 0.
struct TrapCoefficients {
  int g_lo = 0, f_lo = 0, g_hi = 0, f_hi = 0;  // at beta_lo and beta_hi
};
struct TriCoefficients {
  int g = 0, h = 0, gg = 0;
};

TrapCoefficients trap_coefficients(int m_z, double beta_lo, double beta_hi,
                                   const VoxelIndex& n, double phi,
                                   const ScanGeometry& g);
TriCoefficients tri_coefficients(int m_z, double beta, const VoxelIndex& n,
                                 double phi, const ScanGeometry& g);

// Relative volume (fraction of a*b*c) of the voxel part that lies beyond the
// row-edge plane m_z, toward the z-apex, restricted to the band between the
// rays beta_lo and beta_hi (both crossing both x-faces). m_z must be nonzero;
// rows below the central plane are evaluated through the z-mirror.
double vol_rel_trapezoid(int m_z, double beta_lo, double beta_hi,
                         const TrapCoefficients& C, const VoxelIndex& n,
                         double phi, const ScanGeometry& g);

// Same quantity restricted to the corner triangle between the apex ray of the
// zone containing beta and the ray at beta (cumulative from the apex). The
// corner is resolved internally from the zone; beta must lie in one of the
// two corner-triangle zones.
double vol_rel_triangle(int m_z, double beta, const TriCoefficients& C,
                        const VoxelIndex& n, double phi, const ScanGeometry& g);

// Residual band volume between consecutive row edges:
//   vol_rel(m_z - 1) - vol_rel(m_z),
// with coefficients supplied per row. Tiny negative results (>= -1e-12) are
// clamped to zero. Rows adjacent to the central plane (edge index 0) are not
// representable here and raise CentralRow.
double vol_res_trapezoid(int m_z, double beta_lo, double beta_hi,
                         const TrapCoefficients& C_minus,
                         const TrapCoefficients& C_m, const VoxelIndex& n,
                         double phi, const ScanGeometry& g);

struct VoxelWeight {
  int m_y = 0, m_z = 0;  // centered detector cell indices
  double w = 0;          // voxel-volume fraction
};

// All nonzero volume fractions of voxel n under the cone at angle phi,
// ordered by (m_y, m_z) and clipped to the physical detector. Sums to 1 when
// the voxel's projection is fully covered by the detector.
std::vector<VoxelWeight> voxel_volume_factors(const VoxelIndex& n, double phi,
                                              const ScanGeometry& g);

// Diagnostic hook: when set, every trapezoid/triangle atom evaluation records
// its branch pattern (used by coverage tests).
struct PatternRecorder {
  std::set<std::array<int, 4>> trap;  // (g_lo, f_lo, g_hi, f_hi)
  std::set<std::array<int, 3>> tri;   // (g, h, gg)
};
void set_pattern_recorder(PatternRecorder* recorder);

namespace detail {

// Integral over the band between two x-face-crossing rays of
// max(0, zref - tan(alpha) * depth(x, y)) / c, as a fraction of the pixel
// area a*b. Canonical frame, tan_alpha > 0.
double trap_atom(double phi, double s, double a, double b, double c, double x0,
                 double x1, double beta1, double beta2, double tan_alpha,
                 double zref);

// Same integral over the corner triangle between the apex (xa, ya) ray and
// the ray at beta, cumulative from the apex.
double tri_atom_cum(double phi, double s, double a, double b, double c,
                    double xa, double ya, double beta, double tan_alpha,
                    double zref);

}  // namespace detail

}  // namespace ctsm
