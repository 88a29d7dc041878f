#include "ctsm/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace ctsm {

namespace {

struct P2 {
  double x, y;
};

// Keep the points with keep_sign * cross(u, P - S) >= 0.
std::vector<P2> clip_halfplane(const std::vector<P2>& poly, double sx,
                               double sy, double ux, double uy,
                               double keep_sign) {
  std::vector<P2> out;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const P2& p = poly[i];
    const P2& q = poly[(i + 1) % n];
    const double fp = keep_sign * (ux * (p.y - sy) - uy * (p.x - sx));
    const double fq = keep_sign * (ux * (q.y - sy) - uy * (q.x - sx));
    if (fp >= 0.0) out.push_back(p);
    if ((fp > 0.0 && fq < 0.0) || (fp < 0.0 && fq > 0.0)) {
      const double t = fp / (fp - fq);
      out.push_back({p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)});
    }
  }
  return out;
}

double shoelace(const std::vector<P2>& poly) {
  double acc = 0.0;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const P2& p = poly[i];
    const P2& q = poly[(i + 1) % n];
    acc += p.x * q.y - q.x * p.y;
  }
  return 0.5 * std::abs(acc);
}

// Uniform double in [0, 1) from the top 53 bits of a 64-bit draw.
inline double u01(std::mt19937_64& rng) {
  return double(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

double clip_area_2d(double x0, double x1, double y0, double y1, double phi,
                    double s, double d, double d_y, int cell) {
  const double sx = s * std::cos(phi), sy = s * std::sin(phi);
  std::vector<P2> poly = {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}};
  const int edges[2] = {cell, cell + 1};
  const double signs[2] = {-1.0, +1.0};
  for (int i = 0; i < 2; ++i) {
    const double beta = std::atan(edges[i] * d_y / (s + d));
    // Ray direction from the source toward the detector edge; for a point at
    // fan angle gamma, cross(u, P - S) has the sign of sin(beta - gamma).
    const double ux = -std::cos(phi - beta), uy = -std::sin(phi - beta);
    poly = clip_halfplane(poly, sx, sy, ux, uy, signs[i]);
    if (poly.size() < 3) return 0.0;
  }
  return shoelace(poly) / ((x1 - x0) * (y1 - y0));
}

McEstimate mc_volume_3d(double x0, double x1, double y0, double y1, double zb,
                        double zt, double phi, double s, double d, double d_y,
                        double d_z, int m_y, int m_z, std::uint64_t n_samples,
                        std::uint64_t seed) {
  const double cp = std::cos(phi), sp = std::sin(phi);
  constexpr int n_shards = 16;
  std::uint64_t hits = 0, total = 0;
  for (int shard = 0; shard < n_shards; ++shard) {
    std::mt19937_64 rng(seed + (std::uint64_t)shard);
    const std::uint64_t count =
        n_samples / n_shards + (shard < (int)(n_samples % n_shards) ? 1 : 0);
    for (std::uint64_t i = 0; i < count; ++i) {
      const double x = x0 + (x1 - x0) * u01(rng);
      const double y = y0 + (y1 - y0) * u01(rng);
      const double z = zb + (zt - zb) * u01(rng);
      const double depth = s - x * cp - y * sp;
      const double uy = (s + d) / depth * (y * cp - x * sp) / d_y;
      const double uz = (s + d) / depth * z / d_z;
      if (uy >= m_y && uy < m_y + 1 && uz >= m_z && uz < m_z + 1) ++hits;
    }
    total += count;
  }
  const double p = double(hits) / double(total);
  // Floor the variance at one count's worth so a zero-hit estimate still
  // carries its Poisson-scale uncertainty (3 se ~ the 95% bound 3/total).
  const double se =
      std::sqrt(std::max(p * (1.0 - p), 1.0 / double(total)) / double(total));
  return {p, se};
}

std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int k) {
  std::vector<double> x(k), w(k);
  for (int i = 0; i < k; ++i) {
    // Newton iteration on P_k from the Chebyshev initial guess.
    double t = std::cos(k_pi * (i + 0.75) / (k + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < k; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * t * p1 - j * p2) / (j + 1.0);
      }
      pp = k * (t * p0 - p1) / (t * t - 1.0);
      const double dt = p0 / pp;
      t -= dt;
      if (std::abs(dt) < 1e-15) break;
    }
    x[i] = t;
    w[i] = 2.0 / ((1.0 - t * t) * pp * pp);
  }
  return {x, w};
}

double multiline_volume_3d(double x0, double x1, double y0, double y1,
                           double zb, double zt, double phi, double s,
                           double d, double d_y, double d_z, int m_y, int m_z,
                           int k) {
  const double cp = std::cos(phi), sp = std::sin(phi);
  const double sx = s * cp, sy = s * sp;
  // Clip the ray-placement rectangle to the voxel's projected corner bounding
  // box (the silhouette of a convex body is contained in it).
  double u_min = 0, u_max = 0, v_min = 0, v_max = 0;
  bool first = true;
  for (double vx : {x0, x1})
    for (double vy : {y0, y1}) {
      const double depth = s - vx * cp - vy * sp;
      const double u = (s + d) / depth * (vy * cp - vx * sp) / d_y;
      u_min = first ? u : std::min(u_min, u);
      u_max = first ? u : std::max(u_max, u);
      for (double vz : {zb, zt}) {
        const double v = (s + d) / depth * vz / d_z;
        if (first) {
          v_min = v_max = v;
        } else {
          v_min = std::min(v_min, v);
          v_max = std::max(v_max, v);
        }
        first = false;
      }
    }
  const double u_lo = std::max((double)m_y, u_min);
  const double u_hi = std::min((double)m_y + 1.0, u_max);
  const double v_lo = std::max((double)m_z, v_min);
  const double v_hi = std::min((double)m_z + 1.0, v_max);
  if (u_hi <= u_lo || v_hi <= v_lo) return 0.0;

  const auto [nodes, wts] = gauss_legendre(k);
  const double uc = 0.5 * (u_lo + u_hi), ur = 0.5 * (u_hi - u_lo);
  const double vc = 0.5 * (v_lo + v_hi), vr = 0.5 * (v_hi - v_lo);
  double total = 0.0;
  for (int i = 0; i < k; ++i) {
    const double ey = (uc + ur * nodes[i]) * d_y;
    for (int j = 0; j < k; ++j) {
      const double ez = (vc + vr * nodes[j]) * d_z;
      const double dx = -d * cp - ey * sp;
      const double dy = -d * sp + ey * cp;
      const double dz = ez;
      // Slab intersection of P = S + t (D - S), t >= 0.
      double t0 = 0.0, t1 = std::numeric_limits<double>::infinity();
      const double org[3] = {sx, sy, 0.0};
      const double dir[3] = {dx - sx, dy - sy, dz};
      const double lo[3] = {x0, y0, zb}, hi[3] = {x1, y1, zt};
      for (int ax = 0; ax < 3; ++ax) {
        if (std::abs(dir[ax]) < 1e-300) {
          if (org[ax] < lo[ax] || org[ax] > hi[ax]) {
            t0 = 1.0;
            t1 = 0.0;
            break;
          }
          continue;
        }
        double ta = (lo[ax] - org[ax]) / dir[ax];
        double tb = (hi[ax] - org[ax]) / dir[ax];
        if (ta > tb) std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
      }
      if (t1 > t0)
        total += wts[i] * wts[j] * (cube(t1) - cube(t0)) / 3.0;
    }
  }
  // dV = t^2 d_y d_z (s+d) dt du dv; the GL weights carry du dv up to the
  // half-range Jacobian.
  return d_y * d_z * (s + d) * total * ur * vr /
         ((x1 - x0) * (y1 - y0) * (zt - zb));
}

Eigen::MatrixXd to_dense(const SparseSystemMatrix& w,
                         std::uint64_t max_entries) {
  if (w.n_rows * w.n_cols > max_entries)
    fail(ErrorCode::TooLarge, "matrix too large to densify");
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero((Eigen::Index)w.n_rows,
                                            (Eigen::Index)w.n_cols);
  for (std::uint64_t r = 0; r < w.n_rows; ++r)
    for (std::uint64_t k = w.row_start[r]; k < w.row_start[r + 1]; ++k)
      m((Eigen::Index)r, (Eigen::Index)w.col[k]) += w.val[k];
  return m;
}

double largest_singular_value_dense(const Eigen::MatrixXd& m) {
  Eigen::BDCSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues()(0);
}

Eigen::VectorXd solve_normal_equations(const Eigen::MatrixXd& w,
                                       const Eigen::VectorXd& p,
                                       double lambda) {
  Eigen::MatrixXd a = w.transpose() * w;
  a.diagonal().array() += lambda;
  return Eigen::LDLT<Eigen::MatrixXd>(a).solve(w.transpose() * p);
}

}  // namespace ctsm
