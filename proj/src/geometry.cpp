#include "ctsm/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace ctsm {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::DegenerateGeometry: return "DegenerateGeometry";
    case ErrorCode::RayParallelToFace: return "RayParallelToFace";
    case ErrorCode::SingularPhi: return "SingularPhi";
    case ErrorCode::CentralRow: return "CentralRow";
    case ErrorCode::ZRestrictionViolation: return "ZRestrictionViolation";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::ZeroMatrix: return "ZeroMatrix";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::OutOfMemory: return "OutOfMemory";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::IoFailure: return "IoFailure";
  }
  return "UnknownError";
}

void ScanGeometry::validate() const {
  if (!(s > 0.0)) fail(ErrorCode::InvalidSpec, "source distance s must be > 0");
  if (!(d >= 0.0)) fail(ErrorCode::InvalidSpec, "detector distance d must be >= 0");
  if (!(d_y > 0.0) || !(d_z > 0.0))
    fail(ErrorCode::InvalidSpec, "detector pitches must be > 0");
  if (n_det_y <= 0 || n_det_z <= 0 || n_angles <= 0)
    fail(ErrorCode::InvalidSpec, "detector and angle counts must be > 0");
  if (n_det_y % 2 != 0)
    fail(ErrorCode::InvalidSpec, "n_det_y must be even (centered detector)");
  if (n_det_z != 1 && n_det_z % 2 != 0)
    fail(ErrorCode::InvalidSpec, "n_det_z must be 1 (2D) or even (centered detector)");
  if (!(a > 0.0) || !(b > 0.0) || !(c > 0.0))
    fail(ErrorCode::InvalidSpec, "voxel sizes must be > 0");
  if (n_x <= 0 || n_y <= 0 || n_z <= 0)
    fail(ErrorCode::InvalidSpec, "grid dimensions must be > 0");
  if (n_det_z == 1 && n_z > 1)
    fail(ErrorCode::InvalidSpec, "volume grid requires n_det_z > 1");
  if (!(angle_end > angle_start))
    fail(ErrorCode::InvalidSpec, "angle_end must exceed angle_start");
  if (!std::isfinite(s) || !std::isfinite(d) || !std::isfinite(d_y) ||
      !std::isfinite(d_z) || !std::isfinite(a) || !std::isfinite(b) ||
      !std::isfinite(c) || !std::isfinite(angle_start) || !std::isfinite(angle_end))
    fail(ErrorCode::NonFinite, "geometry parameters must be finite");
  // The source circle must stay clear of the grid.
  const double rx = n_x * a / 2.0, ry = n_y * b / 2.0;
  if (s <= std::hypot(rx, ry))
    fail(ErrorCode::DegenerateGeometry, "source circle intersects the grid");
}

double point_angle(double x, double y, double s, double phi) {
  const double num = y * std::cos(phi) - x * std::sin(phi);
  const double den = s - y * std::sin(phi) - x * std::cos(phi);
  if (den <= k_eps_den_rel * s)
    fail(ErrorCode::DegenerateGeometry, "point on or behind the source plane");
  return std::atan2(num, den);
}

std::array<double, 4> vertex_angles(double x0, double x1, double y0, double y1,
                                    double s, double phi) {
  return {point_angle(x0, y0, s, phi), point_angle(x1, y0, s, phi),
          point_angle(x1, y1, s, phi), point_angle(x0, y1, s, phi)};
}

std::array<double, 4> vertex_angles(const VoxelIndex& n, double phi,
                                    const ScanGeometry& g) {
  return vertex_angles(g.face_x(n.ix), g.face_x(n.ix + 1), g.face_y(n.iy),
                       g.face_y(n.iy + 1), g.s, phi);
}

Frame2D canonical_orientation(double x0, double x1, double y0, double y1,
                              double phi, double s) {
  const double cx = 0.5 * (x0 + x1), cy = 0.5 * (y0 + y1);
  // Quadrant hint: direction from the pixel center to the source.
  const double chi = std::atan2(s * std::sin(phi) - cy, s * std::cos(phi) - cx);
  const int k0 = ((int)std::lround(chi / (k_pi / 2)) % 4 + 4) % 4;
  const int tries[4] = {k0, (k0 + 1) % 4, (k0 + 3) % 4, (k0 + 2) % 4};
  for (int k : tries) {
    double fx0 = x0, fx1 = x1, fy0 = y0, fy1 = y1, fphi = phi;
    for (int r = 0; r < k; ++r) {
      // (x, y) -> (y, -x): new x-faces are the old y-faces, new y-faces are
      // the negated old x-faces in swapped order.
      const double nx0 = fy0, nx1 = fy1, ny0 = -fx1, ny1 = -fx0;
      fx0 = nx0; fx1 = nx1; fy0 = ny0; fy1 = ny1;
      fphi -= k_pi / 2;
    }
    const auto gm = vertex_angles(fx0, fx1, fy0, fy1, s, fphi);
    if (std::max(gm[0], gm[1]) <= std::min(gm[2], gm[3]) + k_canon_slack)
      return {fx0, fx1, fy0, fy1, fphi, k};
  }
  fail(ErrorCode::DegenerateGeometry, "no canonical quadrant found");
}

CanonicalIndex canonical_orientation(const VoxelIndex& n, double phi,
                                     const ScanGeometry& g) {
  if (g.a != g.b || g.n_x != g.n_y)
    fail(ErrorCode::InvalidSpec,
         "index-level canonical orientation requires a square grid (a == b, n_x == n_y)");
  const Frame2D f = canonical_orientation(g.face_x(n.ix), g.face_x(n.ix + 1),
                                          g.face_y(n.iy), g.face_y(n.iy + 1),
                                          phi, g.s);
  VoxelIndex m = n;
  for (int r = 0; r < f.rotations; ++r) {
    const int ix = m.ix;
    m.ix = m.iy;
    m.iy = g.n_x - 1 - ix;
  }
  return {m, f.phi, f.rotations};
}

IndexRange relevant_detectors_2d(const VoxelIndex& n, double phi,
                                 const ScanGeometry& g) {
  const Frame2D f = canonical_orientation(g.face_x(n.ix), g.face_x(n.ix + 1),
                                          g.face_y(n.iy), g.face_y(n.iy + 1),
                                          phi, g.s);
  const auto gm = vertex_angles(f.x0, f.x1, f.y0, f.y1, g.s, f.phi);
  const double G1 = std::min(gm[0], gm[1]);
  const double G4 = std::max(gm[2], gm[3]);
  const double t_lo = std::tan(G1) * g.sdd() / g.d_y;
  const double t_hi = std::tan(G4) * g.sdd() / g.d_y;
  IndexRange r{(int)std::floor(t_lo), (int)std::ceil(t_hi)};
  r.lo = std::max(r.lo, -g.n_det_y / 2);
  r.hi = std::min(r.hi, g.n_det_y / 2);
  return r;
}

IndexRange relevant_detectors_z(const VoxelIndex& n, double phi,
                                const ScanGeometry& g) {
  const double xs[2] = {g.face_x(n.ix), g.face_x(n.ix + 1)};
  const double ys[2] = {g.face_y(n.iy), g.face_y(n.iy + 1)};
  const double zs[2] = {g.face_z(n.iz), g.face_z(n.iz + 1)};
  double m_min = 0.0, m_max = 0.0;
  bool first = true;
  for (double vx : xs)
    for (double vy : ys) {
      const double depth = ray_depth(vx, vy, g.s, phi);
      if (depth <= k_eps_den_rel * g.s)
        fail(ErrorCode::DegenerateGeometry, "voxel corner on the source plane");
      for (double vz : zs) {
        const double m = g.sdd() / g.d_z * vz / depth;
        m_min = first ? m : std::min(m_min, m);
        m_max = first ? m : std::max(m_max, m);
        first = false;
      }
    }
  IndexRange r{(int)std::floor(m_min), (int)std::ceil(m_max)};
  r.lo = std::max(r.lo, -g.n_det_z / 2);
  r.hi = std::min(r.hi, g.n_det_z / 2);
  return r;
}

namespace {
void check_dual(double v1, double v2, const char* what) {
  if (std::abs(v1 - v2) > 1e-12 * std::max(1.0, std::abs(v1)))
    fail(ErrorCode::NonFinite, std::string("dual-form disagreement in ") + what);
}
}  // namespace

Point3 ray_point_from_x(double x, double beta, double m_z, double phi,
                        const ScanGeometry& g) {
  const double cpb = std::cos(phi - beta);
  if (std::abs(cpb) < k_eps_angle)
    fail(ErrorCode::RayParallelToFace, "ray parallel to x-faces");
  const double y = g.s * std::sin(phi) - (g.s * std::cos(phi) - x) * std::tan(phi - beta);
  const double tan_alpha = m_z * g.d_z / g.sdd();
  const double z1 = tan_alpha * std::cos(beta) / cpb * (g.s * std::cos(phi) - x);
  const double z2 = tan_alpha * ray_depth(x, y, g.s, phi);
  check_dual(z1, z2, "ray_point_from_x");
  return {x, y, z1};
}

Point3 ray_point_from_y(double y, double beta, double m_z, double phi,
                        const ScanGeometry& g) {
  const double spb = std::sin(phi - beta);
  if (std::abs(spb) < k_eps_angle)
    fail(ErrorCode::RayParallelToFace, "ray parallel to y-faces");
  const double x = g.s * std::cos(phi) - (g.s * std::sin(phi) - y) / std::tan(phi - beta);
  const double tan_alpha = m_z * g.d_z / g.sdd();
  const double z1 = tan_alpha * std::cos(beta) / spb * (g.s * std::sin(phi) - y);
  const double z2 = tan_alpha * ray_depth(x, y, g.s, phi);
  check_dual(z1, z2, "ray_point_from_y");
  return {x, y, z1};
}

int validate_z_restriction(const ScanGeometry& g, int max_rows) {
  g.validate();
  if (g.is_2d()) return 1;
  int worst = 0;
  for (int ip = 0; ip < g.n_angles; ++ip) {
    const double phi = g.angle(ip);
    for (int iy = 0; iy < g.n_y; ++iy) {
      for (int ix = 0; ix < g.n_x; ++ix) {
        // Extreme inverse depths over the four xy-corners of the column.
        double inv_lo = 0.0, inv_hi = 0.0;
        bool first = true;
        for (int cx = 0; cx < 2; ++cx)
          for (int cy = 0; cy < 2; ++cy) {
            const double depth =
                ray_depth(g.face_x(ix + cx), g.face_y(iy + cy), g.s, phi);
            if (depth <= k_eps_den_rel * g.s)
              fail(ErrorCode::DegenerateGeometry,
                   "voxel corner on the source plane");
            const double inv = 1.0 / depth;
            inv_lo = first ? inv : std::min(inv_lo, inv);
            inv_hi = first ? inv : std::max(inv_hi, inv);
            first = false;
          }
        const double scale = g.sdd() / g.d_z;
        for (int iz = 0; iz < g.n_z; ++iz) {
          double m_min = 0.0, m_max = 0.0;
          bool f2 = true;
          for (int cz = 0; cz < 2; ++cz) {
            const double z = g.face_z(iz + cz);
            for (double inv : {inv_lo, inv_hi}) {
              const double m = scale * z * inv;
              m_min = f2 ? m : std::min(m_min, m);
              m_max = f2 ? m : std::max(m_max, m);
              f2 = false;
            }
          }
          const int rows =
              (int)std::ceil(m_max) - 1 - (int)std::floor(m_min) + 1;
          worst = std::max(worst, rows);
          if (rows > max_rows)
            fail(ErrorCode::ZRestrictionViolation,
                 "voxel (" + std::to_string(ix) + "," + std::to_string(iy) +
                     "," + std::to_string(iz) + ") at angle " +
                     std::to_string(ip) + " spans " + std::to_string(rows) +
                     " detector rows (max " + std::to_string(max_rows) + ")");
        }
      }
    }
  }
  return worst;
}

}  // namespace ctsm
