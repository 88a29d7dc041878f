#include "ctsm/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ctsm {

namespace {

// Grid traversal from the source along a unit direction; emits ordered
// (column, length) pairs for every crossed voxel.
void trace_ray(double ox, double oy, double oz, double ux, double uy,
               double uz, const ScanGeometry& g, double scale,
               std::vector<RayHit>* out) {
  const double lo[3] = {g.face_x(0), g.face_y(0), g.face_z(0)};
  const double hi[3] = {g.face_x(g.n_x), g.face_y(g.n_y), g.face_z(g.n_z)};
  const double org[3] = {ox, oy, oz};
  const double dir[3] = {ux, uy, uz};
  const double pitch[3] = {g.a, g.b, g.c};
  const int dims[3] = {g.n_x, g.n_y, g.n_z};

  double tmin = 0.0, tmax = std::numeric_limits<double>::infinity();
  for (int ax = 0; ax < 3; ++ax) {
    if (std::abs(dir[ax]) < 1e-15) {
      if (org[ax] < lo[ax] || org[ax] > hi[ax]) return;
      continue;
    }
    double ta = (lo[ax] - org[ax]) / dir[ax];
    double tb = (hi[ax] - org[ax]) / dir[ax];
    if (ta > tb) std::swap(ta, tb);
    tmin = std::max(tmin, ta);
    tmax = std::min(tmax, tb);
  }
  if (tmax <= tmin) return;

  const double eps = 1e-12 * std::min({g.a, g.b, g.c});
  int idx[3];
  for (int ax = 0; ax < 3; ++ax) {
    const double p = org[ax] + (tmin + eps) * dir[ax];
    idx[ax] = (int)std::floor((p - lo[ax]) / pitch[ax]);
  }
  double t = tmin;
  while (t < tmax - eps) {
    bool inside = true;
    for (int ax = 0; ax < 3; ++ax)
      inside = inside && idx[ax] >= 0 && idx[ax] < dims[ax];
    if (!inside) break;
    double tn = tmax;
    int step_ax = -1;
    for (int ax = 0; ax < 3; ++ax) {
      if (dir[ax] == 0.0) continue;
      const int face = idx[ax] + (dir[ax] > 0 ? 1 : 0);
      const double tc = (lo[ax] + face * pitch[ax] - org[ax]) / dir[ax];
      if (tc < tn) {
        tn = tc;
        step_ax = ax;
      }
    }
    if (tn > t)
      out->push_back({(std::uint32_t)((std::uint64_t(idx[2]) * g.n_y + idx[1]) *
                                          g.n_x +
                                      idx[0]),
                      (tn - t) * scale});
    if (step_ax < 0 || tn >= tmax) break;
    idx[step_ax] += dir[step_ax] > 0 ? 1 : -1;
    t = tn;
  }
}

void cell_ray(double e_y, double e_z, int angle_index, const ScanGeometry& g,
              double scale, std::vector<RayHit>* out) {
  const double phi = g.angle(angle_index);
  const double ox = g.s * std::cos(phi), oy = g.s * std::sin(phi);
  const Point3 det = detector_point(e_y, e_z, phi, g);
  double ux = det.x - ox, uy = det.y - oy, uz = det.z;
  const double nrm = std::sqrt(ux * ux + uy * uy + uz * uz);
  ux /= nrm;
  uy /= nrm;
  uz /= nrm;
  trace_ray(ox, oy, 0.0, ux, uy, uz, g, scale, out);
}

std::vector<RayHit> merge_hits(std::vector<RayHit> hits) {
  std::stable_sort(hits.begin(), hits.end(),
                   [](const RayHit& a, const RayHit& b) { return a.col < b.col; });
  std::vector<RayHit> out;
  for (const RayHit& h : hits) {
    if (!out.empty() && out.back().col == h.col)
      out.back().len += h.len;
    else
      out.push_back(h);
  }
  return out;
}

}  // namespace

std::vector<RayHit> line_weights(int m_y, int m_z, int angle_index,
                                 const ScanGeometry& g) {
  if (m_y < -g.n_det_y / 2 || m_y >= g.n_det_y / 2)
    fail(ErrorCode::InvalidSpec, "detector cell m_y out of range");
  if (g.is_2d() && m_z != 0)
    fail(ErrorCode::InvalidSpec, "m_z must be 0 for a 2D scan");
  if (!g.is_2d() && (m_z < -g.n_det_z / 2 || m_z >= g.n_det_z / 2))
    fail(ErrorCode::InvalidSpec, "detector cell m_z out of range");
  std::vector<RayHit> out;
  const double e_z = g.is_2d() ? 0.0 : (m_z + 0.5);
  cell_ray(m_y + 0.5, e_z, angle_index, g, 1.0, &out);
  return out;
}

std::vector<RayHit> multiline_weights(int m_y, int m_z, int angle_index,
                                      const ScanGeometry& g, int k) {
  if (k <= 0) fail(ErrorCode::InvalidSpec, "multiline ray count must be > 0");
  if (k == 1) return merge_hits(line_weights(m_y, m_z, angle_index, g));
  std::vector<RayHit> hits;
  if (g.is_2d()) {
    for (int i = 0; i < k; ++i)
      cell_ray(m_y + (i + 0.5) / k, 0.0, angle_index, g, 1.0 / k, &hits);
  } else {
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j)
        cell_ray(m_y + (i + 0.5) / k, m_z + (j + 0.5) / k, angle_index, g,
                 1.0 / (double(k) * k), &hits);
  }
  return merge_hits(hits);
}

}  // namespace ctsm
