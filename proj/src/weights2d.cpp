#include "ctsm/weights2d.hpp"

#include <algorithm>
#include <cmath>

namespace ctsm {

double triangle_area_factor(double phi, double gamma_far, double gamma_near,
                            double beta, double a, double b) {
  if (std::abs(std::sin(gamma_near - gamma_far)) < k_eps_angle) return 0.0;
  if (std::abs(std::sin(beta - phi)) < k_eps_angle) return 0.0;
  const double den = std::abs(std::sin(2.0 * (phi - beta)));
  const double r = std::sin(phi - gamma_near) * std::sin(beta - gamma_far) /
                   std::sin(gamma_near - gamma_far);
  return (a / (b * den)) * r * r;
}

namespace {
double band_area(double phi, double x0, double x1, double beta_lo,
                 double beta_hi, double s, double b) {
  const double c1 = std::cos(phi - beta_lo), c2 = std::cos(phi - beta_hi);
  if (std::abs(c1) < k_eps_angle || std::abs(c2) < k_eps_angle)
    fail(ErrorCode::RayParallelToFace, "band ray parallel to x-faces");
  const double xm = 0.5 * (x0 + x1);
  return (1.0 / b) * std::abs(s * std::cos(phi) - xm) *
         std::abs(std::tan(phi - beta_lo) - std::tan(phi - beta_hi));
}
}  // namespace

double trapezoid_area_factor(double phi, double n_x, double beta_lo,
                             double beta_hi, const ScanGeometry& g) {
  const double x0 = n_x * g.a;
  return band_area(phi, x0, x0 + g.a, beta_lo, beta_hi, g.s, g.b);
}

namespace detail {

StripSweep strip_sweep(double x0, double x1, double y0, double y1, double phi,
                       double s, double d, double d_y) {
  StripSweep sw;
  sw.f = canonical_orientation(x0, x1, y0, y1, phi, s);
  const auto gm = vertex_angles(sw.f.x0, sw.f.x1, sw.f.y0, sw.f.y1, s, sw.f.phi);
  sw.G1 = std::min(gm[0], gm[1]);
  sw.G2 = std::max(gm[0], gm[1]);
  sw.G3 = std::min(gm[2], gm[3]);
  sw.G4 = std::max(gm[2], gm[3]);
  // Corner with angle G1 (lower triangle apex) and with angle G4 (upper).
  const double apex1_x = (gm[0] <= gm[1]) ? sw.f.x0 : sw.f.x1;
  const double apex4_x = (gm[3] >= gm[2]) ? sw.f.x0 : sw.f.x1;

  // Breakpoints: the four corner angles plus every detector edge angle
  // strictly inside the support.
  std::vector<double> brk = {sw.G1, sw.G2, sw.G3, sw.G4};
  const double t_lo = std::tan(sw.G1) * (s + d) / d_y;
  const double t_hi = std::tan(sw.G4) * (s + d) / d_y;
  const long long e_lo = (long long)std::floor(t_lo) + 1;
  const long long e_hi = (long long)std::ceil(t_hi) - 1;
  for (long long e = e_lo; e <= e_hi; ++e) {
    const double be = std::atan(e * d_y / (s + d));
    if (sw.G1 < be && be < sw.G4) brk.push_back(be);
  }
  std::sort(brk.begin(), brk.end());
  brk.erase(std::unique(brk.begin(), brk.end()), brk.end());

  for (std::size_t i = 0; i + 1 < brk.size(); ++i) {
    const double blo = brk[i], bhi = brk[i + 1];
    if (bhi - blo < k_eps_piece) continue;
    const double mid = 0.5 * (blo + bhi);
    SweepPiece p;
    p.cell = (int)std::floor(std::tan(mid) * (s + d) / d_y);
    p.b_lo = blo;
    p.b_hi = bhi;
    if (mid <= sw.G2) {
      p.kind = 0;
      p.apex_x = apex1_x;
      p.apex_y = sw.f.y0;
    } else if (mid <= sw.G3) {
      p.kind = 1;
    } else {
      p.kind = 2;
      p.apex_x = apex4_x;
      p.apex_y = sw.f.y1;
    }
    sw.pieces.push_back(p);
  }
  return sw;
}

double piece_area(const StripSweep& sw, const SweepPiece& p, double s) {
  const double a = sw.f.x1 - sw.f.x0, b = sw.f.y1 - sw.f.y0;
  switch (p.kind) {
    case 0:
      return triangle_area_factor(sw.f.phi, sw.G1, sw.G2, p.b_hi, a, b) -
             triangle_area_factor(sw.f.phi, sw.G1, sw.G2, p.b_lo, a, b);
    case 1:
      return band_area(sw.f.phi, sw.f.x0, sw.f.x1, p.b_lo, p.b_hi, s, b);
    default:
      return triangle_area_factor(sw.f.phi, sw.G4, sw.G3, p.b_lo, a, b) -
             triangle_area_factor(sw.f.phi, sw.G4, sw.G3, p.b_hi, a, b);
  }
}

}  // namespace detail

std::vector<CellWeight> pixel_area_factors(const VoxelIndex& n, double phi,
                                           const ScanGeometry& g) {
  const auto sw = detail::strip_sweep(g.face_x(n.ix), g.face_x(n.ix + 1),
                                      g.face_y(n.iy), g.face_y(n.iy + 1), phi,
                                      g.s, g.d, g.d_y);
  const int cell_lo = -g.n_det_y / 2, cell_hi = g.n_det_y / 2 - 1;
  std::vector<CellWeight> out;
  for (const auto& p : sw.pieces) {
    if (p.cell < cell_lo || p.cell > cell_hi) continue;
    double w = detail::piece_area(sw, p, g.s);
    if (w < 0.0) {
      if (w < k_neg_clamp_2d)
        fail(ErrorCode::NonFinite, "negative area weight beyond FP tolerance");
      w = 0.0;
    }
    if (!out.empty() && out.back().m_y == p.cell)
      out.back().w += w;
    else
      out.push_back({p.cell, w});
  }
  out.erase(std::remove_if(out.begin(), out.end(),
                           [](const CellWeight& cw) { return cw.w <= k_eps_weight; }),
            out.end());
  return out;
}

}  // namespace ctsm
