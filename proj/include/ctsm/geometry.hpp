#pragma once

#include <array>
#include <cmath>
#include <cstdint>

#include "ctsm/common.hpp"

namespace ctsm {

inline constexpr double k_pi = 3.14159265358979323846;

// Circular fan/cone-beam scan over a centered cartesian grid.
//
// Frames and conventions:
//  - The source moves on a circle of radius s in the z=0 plane:
//      S(phi) = (s cos phi, s sin phi, 0).
//  - The flat detector is at distance d behind the origin, perpendicular to
//    the central ray. A detector point with in-plane coordinate e_y (along
//    (-sin phi, cos phi, 0)) and height e_z is
//      D = (-d cos phi - e_y sin phi, -d sin phi + e_y cos phi, e_z).
//  - Detector edges are uniform: edge m_y sits at e_y = m_y * d_y, so the
//    fan angle of edge m_y obeys tan(beta) = m_y d_y / (s + d); edge m_z at
//    e_z = m_z * d_z with tan(alpha) = m_z d_z / (s + d). Edge indices are
//    centered integers, which is why detector counts must be even; cell m
//    spans edges [m, m+1] and maps to raster index m + n_det/2.
//  - The voxel grid is centered on the origin: voxel (ix,iy,iz) occupies
//    [face_x(ix), face_x(ix+1)] x [face_y(iy), ...] x [face_z(iz), ...].
struct ScanGeometry {
  double s = 0.0;   // source-origin distance
  double d = 0.0;   // origin-detector distance
  double d_y = 1.0; // detector pitch along the fan direction
  double d_z = 1.0; // detector pitch along z
  int n_det_y = 0;
  int n_det_z = 1;
  int n_angles = 0;
  double angle_start = 0.0;
  double angle_end = 2.0 * k_pi;
  double a = 1.0;   // voxel size in x
  double b = 1.0;   // voxel size in y
  double c = 1.0;   // voxel size in z
  int n_x = 0;
  int n_y = 0;
  int n_z = 1;

  void validate() const;  // throws InvalidSpec / DegenerateGeometry

  bool is_2d() const { return n_z == 1 && n_det_z == 1; }
  double sdd() const { return s + d; }
  double angle(int i) const {
    return angle_start + (angle_end - angle_start) * i / n_angles;
  }
  double face_x(double ix) const { return (ix - n_x / 2.0) * a; }
  double face_y(double iy) const { return (iy - n_y / 2.0) * b; }
  double face_z(double iz) const { return (iz - n_z / 2.0) * c; }

  std::uint64_t n_voxels() const {
    return std::uint64_t(n_x) * std::uint64_t(n_y) * std::uint64_t(n_z);
  }
  std::uint64_t n_measurements() const {
    return std::uint64_t(n_angles) * std::uint64_t(n_det_y) *
           std::uint64_t(n_det_z);
  }
};

struct VoxelIndex {
  int ix = 0, iy = 0, iz = 0;
};

// Centered detector cell indices; cell (m_y, m_z) spans edges
// [m_y, m_y+1] x [m_z, m_z+1] in pitch units.
struct DetectorIndex {
  int m_y = 0, m_z = 0;
};

inline std::uint64_t voxel_column(const ScanGeometry& g, const VoxelIndex& n) {
  return (std::uint64_t(n.iz) * g.n_y + n.iy) * g.n_x + n.ix;
}
inline std::uint64_t measurement_row(const ScanGeometry& g, int angle_index,
                                     const DetectorIndex& m) {
  const std::uint64_t raster =
      std::uint64_t(m.m_z + g.n_det_z / 2) * g.n_det_y + (m.m_y + g.n_det_y / 2);
  return std::uint64_t(angle_index) * g.n_det_y * g.n_det_z + raster;
}

// Fan angle of a point (x, y): tan(gamma) = (y cos phi - x sin phi) / depth
// with depth = s - x cos phi - y sin phi. Throws DegenerateGeometry when the
// point is too close to the source plane.
double point_angle(double x, double y, double s, double phi);

inline double ray_depth(double x, double y, double s, double phi) {
  return s - x * std::cos(phi) - y * std::sin(phi);
}

// Fan angle of detector edge m (m may be fractional for interior positions).
inline double detector_edge_angle(double m, const ScanGeometry& g) {
  return std::atan(m * g.d_y / g.sdd());
}
inline double detector_row_angle(double m, const ScanGeometry& g) {
  return std::atan(m * g.d_z / g.sdd());
}

struct Point3 {
  double x = 0, y = 0, z = 0;
};

// Physical location of the detector position (e_y, e_z) in pitch units.
inline Point3 detector_point(double e_y, double e_z, double phi,
                             const ScanGeometry& g) {
  const double cp = std::cos(phi), sp = std::sin(phi);
  return {-g.d * cp - e_y * g.d_y * sp, -g.d * sp + e_y * g.d_y * cp,
          e_z * g.d_z};
}

// Fan angles of the four pixel corners, counterclockwise from (x0, y0):
// corner 1 = (x0,y0), 2 = (x1,y0), 3 = (x1,y1), 4 = (x0,y1).
std::array<double, 4> vertex_angles(double x0, double x1, double y0, double y1,
                                    double s, double phi);
std::array<double, 4> vertex_angles(const VoxelIndex& n, double phi,
                                    const ScanGeometry& g);

// A pixel/source configuration rotated by `rotations` quarter turns
// (x,y) -> (y,-x) so that the corner ordering max(g1,g2) <= min(g3,g4) holds.
struct Frame2D {
  double x0 = 0, x1 = 0, y0 = 0, y1 = 0;
  double phi = 0;
  int rotations = 0;
};

Frame2D canonical_orientation(double x0, double x1, double y0, double y1,
                              double phi, double s);

// Index-level canonical orientation. Requires a == b and n_x == n_y so the
// quarter turn maps the grid onto itself: (ix, iy) -> (iy, n_x - 1 - ix).
struct CanonicalIndex {
  VoxelIndex n;
  double phi = 0;
  int rotations = 0;
};
CanonicalIndex canonical_orientation(const VoxelIndex& n, double phi,
                                     const ScanGeometry& g);

// Inclusive range of objects (edges or rows), see functions below.
struct IndexRange {
  int lo = 0, hi = 0;
  bool empty() const { return hi < lo; }
};

// Bracketing detector edge-index range for the pixel's angular support:
// edge lo sits at or below Gamma_1 and edge hi at or above Gamma_4, each
// tight to within one pitch, so [lo, hi-1] is the touched cell range.
// Clamped to the physical detector.
IndexRange relevant_detectors_2d(const VoxelIndex& n, double phi,
                                 const ScanGeometry& g);

// Detector row-edge range touched by the voxel: row edges between
// floor(min m) and ceil(max m) over the eight corner magnifications
// m = z (s+d) / (d_z * depth). Clamped to the physical detector.
IndexRange relevant_detectors_z(const VoxelIndex& n, double phi,
                                const ScanGeometry& g);

// Point on the ray through detector position (beta, row edge m_z) given one
// transverse coordinate. Each relation is evaluated through two independent
// expressions which must agree to 1e-12 relative.
Point3 ray_point_from_x(double x, double beta, double m_z, double phi,
                        const ScanGeometry& g);
Point3 ray_point_from_y(double y, double beta, double m_z, double phi,
                        const ScanGeometry& g);

// Verifies that no voxel projects onto more than `max_rows` detector rows at
// any angle. Returns the maximum observed row count; throws
// ZRestrictionViolation if the bound is exceeded.
int validate_z_restriction(const ScanGeometry& g, int max_rows = 3);

}  // namespace ctsm
