#include "ctsm/weights3d.hpp"

#include <algorithm>
#include <cmath>

namespace ctsm {

namespace {

thread_local PatternRecorder* g_recorder = nullptr;

// ---- canonical 3D setup ----------------------------------------------------

struct Canon3D {
  Frame2D f;        // canonical xy frame
  double zb = 0;    // voxel z-faces after optional mirroring
  double zt = 0;
  double tan_a = 0; // positive row-edge slope |m_z| d_z / (s+d)
  double zref = 0;  // apex height (top z-face after mirroring)
};

Canon3D canon3d(int m_z, const VoxelIndex& n, double phi,
                const ScanGeometry& g) {
  if (m_z == 0)
    fail(ErrorCode::CentralRow,
         "row edge 0 has tan(alpha) = 0; split the central band instead");
  Canon3D c;
  c.f = canonical_orientation(g.face_x(n.ix), g.face_x(n.ix + 1),
                              g.face_y(n.iy), g.face_y(n.iy + 1), phi, g.s);
  c.zb = g.face_z(n.iz);
  c.zt = g.face_z(n.iz + 1);
  if (m_z < 0) {  // mirror z; row edges -|m_z| map to +|m_z|
    const double zb = -c.zt, zt = -c.zb;
    c.zb = zb;
    c.zt = zt;
  }
  c.tan_a = std::abs(m_z) * g.d_z / g.sdd();
  c.zref = c.zt;
  return c;
}

// ---- trapezoid atom ---------------------------------------------------------

struct TrapFlags {
  int g1 = 0, f1 = 0, g2 = 0, f2 = 0;  // indicators at beta1 / beta2
};

// One x-face contribution: (cr1 [g1] g1^3 - cr2 [g2] g2^3) / S with
// g_i = G - P / cr_i, rewritten without the 1/S cancellation when both
// indicators are active.
double trap_face_part(double G, double P, double S, double t1, double t2,
                      double cr1, double cr2, int flag1, int flag2) {
  if (flag1 && flag2)
    return (t1 - t2) * (cube(G) - 3.0 * G * P * P / (cr1 * cr2) +
                        cube(P) * (cr1 + cr2) / sq(cr1 * cr2));
  if (!flag1 && !flag2) return 0.0;
  double v = 0.0;
  if (flag1) v += cr1 * cube(G - P / cr1);
  if (flag2) v -= cr2 * cube(G - P / cr2);
  return v / S;
}

TrapFlags trap_flags_at(double phi, double s, double a, double x0, double x1,
                        double beta1, double beta2, double tan_a, double zref) {
  const double S = std::sin(phi), C = std::cos(phi);
  const double G = zref / (a * tan_a);
  TrapFlags fl;
  if (std::abs(S) > k_eps_singular) {
    const double t1 = std::tan(beta1), t2 = std::tan(beta2);
    const double cr1 = C + S * t1, cr2 = C + S * t2;
    const double Pg = (s * C - x1) / a, Pf = (s * C - x0) / a;
    fl.g1 = (G - Pg / cr1) > 0.0;
    fl.g2 = (G - Pg / cr2) > 0.0;
    fl.f1 = (G - Pf / cr1) > 0.0;
    fl.f2 = (G - Pf / cr2) > 0.0;
  } else {
    const int gs = (G - (s * C - x1) / a) > 0.0;
    const int fs = (G - (s * C - x0) / a) > 0.0;
    fl.g1 = fl.g2 = gs;
    fl.f1 = fl.f2 = fs;
  }
  return fl;
}

double trap_atom_flags(double phi, double s, double a, double b, double c,
                       double x0, double x1, double beta1, double beta2,
                       double tan_a, double zref, const TrapFlags& fl) {
  const double S = std::sin(phi), C = std::cos(phi);
  const double G = zref / (a * tan_a);
  const double t1 = std::tan(beta1), t2 = std::tan(beta2);
  if (std::abs(S) > k_eps_singular) {
    const double cr1 = C + S * t1, cr2 = C + S * t2;
    const double pg =
        trap_face_part(G, (s * C - x1) / a, S, t1, t2, cr1, cr2, fl.g1, fl.g2);
    const double pf =
        trap_face_part(G, (s * C - x0) / a, S, t1, t2, cr1, cr2, fl.f1, fl.f2);
    if (g_recorder) g_recorder->trap.insert({fl.g1, fl.f1, fl.g2, fl.f2});
    return (a * a / (6.0 * b * c)) * std::abs(tan_a * (pg - pf));
  }
  // Flat-source branch: the row-edge plane is y-independent.
  const double g = G - (s * C - x1) / a;
  const double f = G - (s * C - x0) / a;
  double t = 0.0;
  if (fl.g1) t += g * g * (g + 3.0 * (s * C - x1) / a);
  if (fl.f1) t -= f * f * (f + 3.0 * (s * C - x0) / a);
  return (a * a / (6.0 * b * c)) * std::abs(tan_a * t * (t1 - t2));
}

// ---- corner-triangle atom ---------------------------------------------------

struct TriFlags {
  int g = 0, h = 0, gg = 0;
};

TriFlags tri_flags_at(double phi, double s, double a, double xa, double ya,
                      double beta, double tan_a, double zref) {
  const double S = std::sin(phi), C = std::cos(phi);
  const double G = zref / (a * tan_a);
  const double t = std::tan(beta);
  const double crg = C + S * t, srh = S - C * t;
  const double P = (s * C - xa) / a, Q = (s * S - ya) / a;
  TriFlags fl;
  fl.g = (G - P / crg) > 0.0;
  fl.gg = (G - P * C - Q * S) > 0.0;
  fl.h = (G - Q / srh) > 0.0;
  return fl;
}

double tri_atom_flags(double phi, double s, double a, double b, double c,
                      double xa, double ya, double beta, double tan_a,
                      double zref, const TriFlags& fl) {
  const double S = std::sin(phi), C = std::cos(phi);
  const double G = zref / (a * tan_a);
  const double t = std::tan(beta);
  const double crg = C + S * t;  // cos(phi-beta)/cos(beta)
  const double srh = S - C * t;  // sin(phi-beta)/cos(beta)
  const double P = (s * C - xa) / a;
  const double Q = (s * S - ya) / a;
  const double g = G - P / crg;
  const double gg = G - P * C - Q * S;
  const double h = G - Q / srh;
  if (std::abs(S) > k_eps_singular) {
    if (g_recorder) g_recorder->tri.insert({fl.g, fl.h, fl.gg});
    double pair;
    if (fl.g && fl.gg) {
      // (crg g^3 - gg^3 / C) / S without the cancellation: substitute
      // g = gg/crg-normalized offset delta = (g - gg) / S.
      const double delta = Q - P * srh / crg;
      pair = crg * (3.0 * gg * gg * delta + 3.0 * gg * S * delta * delta +
                    S * S * cube(delta)) -
             cube(gg) * srh / C;
    } else if (!fl.g && !fl.gg) {
      pair = 0.0;
    } else {
      double v = 0.0;
      if (fl.g) v += crg * cube(g);
      if (fl.gg) v -= cube(gg) / C;
      pair = v / S;
    }
    const double tt = pair + (fl.h ? (srh / C) * cube(h) : 0.0);
    return (a * a / (6.0 * b * c)) * std::abs(tan_a * tt);
  }
  // Flat-source branch: the plane is y-independent; h stays well defined.
  double tv = 0.0;
  if (fl.g) tv += g * g * (t * g - 3.0 * t * (g - h));
  if (fl.h) tv -= t * cube(h);
  return (a * a / (6.0 * b * c)) * std::abs(tan_a * tv);
}

}  // namespace

void set_pattern_recorder(PatternRecorder* recorder) { g_recorder = recorder; }

namespace detail {

double trap_atom(double phi, double s, double a, double b, double c, double x0,
                 double x1, double beta1, double beta2, double tan_alpha,
                 double zref) {
  const TrapFlags fl =
      trap_flags_at(phi, s, a, x0, x1, beta1, beta2, tan_alpha, zref);
  return trap_atom_flags(phi, s, a, b, c, x0, x1, beta1, beta2, tan_alpha,
                         zref, fl);
}

double tri_atom_cum(double phi, double s, double a, double b, double c,
                    double xa, double ya, double beta, double tan_alpha,
                    double zref) {
  const TriFlags fl = tri_flags_at(phi, s, a, xa, ya, beta, tan_alpha, zref);
  return tri_atom_flags(phi, s, a, b, c, xa, ya, beta, tan_alpha, zref, fl);
}

}  // namespace detail

// ---- public case operations -------------------------------------------------

FactorTriple factors(int m_y, int m_z, const VoxelIndex& n, double phi,
                     const ScanGeometry& geo) {
  if (m_z == 0)
    fail(ErrorCode::CentralRow, "factors undefined for row edge 0");
  const Frame2D f =
      canonical_orientation(geo.face_x(n.ix), geo.face_x(n.ix + 1),
                            geo.face_y(n.iy), geo.face_y(n.iy + 1), phi, geo.s);
  FactorTriple out;
  out.beta = detector_edge_angle(m_y, geo);
  out.tan_alpha = m_z * geo.d_z / geo.sdd();
  out.phi = f.phi;
  out.a = f.x1 - f.x0;

  const double S = std::sin(f.phi), C = std::cos(f.phi);
  const double t = std::tan(out.beta);
  out.crg = C + S * t;
  out.srh = S - C * t;
  if (std::abs(out.crg) < k_eps_angle)
    fail(ErrorCode::RayParallelToFace, "ray parallel to the x-faces");
  if (std::abs(out.srh) < k_eps_angle)
    fail(ErrorCode::RayParallelToFace, "ray parallel to the y-faces");

  const double a = out.a;
  const double G = geo.face_z(n.iz + 1) / (a * out.tan_alpha);
  const double P1 = (geo.s * C - f.x1) / a;
  const double P0 = (geo.s * C - f.x0) / a;
  const double Q = (geo.s * S - f.y0) / a;
  out.g = G - P1 / out.crg;
  out.f = G - P0 / out.crg;
  out.h = G - Q / out.srh;
  out.g_g = G - P1 * C - Q * S;

  // Angle-substituted dual forms; evaluated when their denominators are well
  // conditioned (1e-6 thresholds) and required to agree to 1e-12.
  const double g1 = point_angle(f.x0, f.y0, geo.s, f.phi);
  const double g2 = point_angle(f.x1, f.y0, geo.s, f.phi);
  const double s12 = std::sin(g1 - g2);
  const double cpb = std::cos(f.phi - out.beta);
  const double spb = std::sin(f.phi - out.beta);
  const double cb = std::cos(out.beta);
  auto check = [](double raw, double raw_term, double dual, const char* what) {
    const double scale = std::max({1.0, std::abs(raw), std::abs(raw_term)});
    if (std::abs(raw - dual) > 1e-12 * scale)
      fail(ErrorCode::NonFinite,
           std::string("factor dual-form disagreement in ") + what);
  };
  if (std::abs(s12) >= 1e-6) {
    if (std::abs(cpb) >= 1e-6) {
      const double g_dual =
          G - cb * std::cos(f.phi - g2) * std::sin(f.phi - g1) / (cpb * s12);
      const double f_dual =
          G - cb * std::cos(f.phi - g1) * std::sin(f.phi - g2) / (cpb * s12);
      check(out.g, P1 / out.crg, g_dual, "g");
      check(out.f, P0 / out.crg, f_dual, "f");
    }
    if (std::abs(spb) >= 1e-6) {
      const double h_dual =
          G - cb * std::sin(f.phi - g2) * std::sin(f.phi - g1) / (spb * s12);
      check(out.h, Q / out.srh, h_dual, "h");
    }
    const double gg_dual =
        G - std::cos(g2) * std::sin(f.phi - g1) / s12;
    check(out.g_g, P1 * C + Q * S, gg_dual, "g_g");
  }
  return out;
}

double tetra_volume(const FactorTriple& t, bool front_face) {
  if (std::abs(std::sin(t.phi)) <= k_eps_singular)
    fail(ErrorCode::SingularPhi,
         "tetrahedron form requires |sin phi| above the flat-source threshold");
  const double v = front_face ? t.g : t.f;
  if (v <= 0.0) return 0.0;
  return cube(t.a) / 6.0 *
         std::abs(t.tan_alpha / std::sin(t.phi) * t.crg * cube(v));
}

TrapCoefficients trap_coefficients(int m_z, double beta_lo, double beta_hi,
                                   const VoxelIndex& n, double phi,
                                   const ScanGeometry& g) {
  const Canon3D c = canon3d(m_z, n, phi, g);
  const double a = c.f.x1 - c.f.x0;
  const TrapFlags fl = trap_flags_at(c.f.phi, g.s, a, c.f.x0, c.f.x1, beta_lo,
                                     beta_hi, c.tan_a, c.zref);
  return {fl.g1, fl.f1, fl.g2, fl.f2};
}

double vol_rel_trapezoid(int m_z, double beta_lo, double beta_hi,
                         const TrapCoefficients& C, const VoxelIndex& n,
                         double phi, const ScanGeometry& g) {
  const Canon3D c = canon3d(m_z, n, phi, g);
  const double a = c.f.x1 - c.f.x0, b = c.f.y1 - c.f.y0, cz = c.zt - c.zb;
  const TrapFlags fl{C.g_lo, C.f_lo, C.g_hi, C.f_hi};
  return trap_atom_flags(c.f.phi, g.s, a, b, cz, c.f.x0, c.f.x1, beta_lo,
                         beta_hi, c.tan_a, c.zref, fl);
}

namespace {
// Apex corner of the triangle zone containing beta (ties resolve to the lower
// zone). Throws when beta lies in the two-face band zone.
void tri_apex(const Frame2D& f, double s, double beta, double* xa, double* ya) {
  const auto gm = vertex_angles(f.x0, f.x1, f.y0, f.y1, s, f.phi);
  const double G1 = std::min(gm[0], gm[1]), G2 = std::max(gm[0], gm[1]);
  const double G3 = std::min(gm[2], gm[3]), G4 = std::max(gm[2], gm[3]);
  if (beta >= G1 - k_eps_angle && beta <= G2 + k_eps_angle) {
    *xa = (gm[0] <= gm[1]) ? f.x0 : f.x1;
    *ya = f.y0;
  } else if (beta >= G3 - k_eps_angle && beta <= G4 + k_eps_angle) {
    *xa = (gm[3] >= gm[2]) ? f.x0 : f.x1;
    *ya = f.y1;
  } else {
    fail(ErrorCode::InvalidSpec, "beta outside the corner-triangle zones");
  }
}
}  // namespace

TriCoefficients tri_coefficients(int m_z, double beta, const VoxelIndex& n,
                                 double phi, const ScanGeometry& g) {
  const Canon3D c = canon3d(m_z, n, phi, g);
  double xa = 0, ya = 0;
  tri_apex(c.f, g.s, beta, &xa, &ya);
  const double a = c.f.x1 - c.f.x0;
  const TriFlags fl =
      tri_flags_at(c.f.phi, g.s, a, xa, ya, beta, c.tan_a, c.zref);
  return {fl.g, fl.h, fl.gg};
}

double vol_rel_triangle(int m_z, double beta, const TriCoefficients& C,
                        const VoxelIndex& n, double phi,
                        const ScanGeometry& g) {
  const Canon3D c = canon3d(m_z, n, phi, g);
  double xa = 0, ya = 0;
  tri_apex(c.f, g.s, beta, &xa, &ya);
  const double a = c.f.x1 - c.f.x0, b = c.f.y1 - c.f.y0, cz = c.zt - c.zb;
  const TriFlags fl{C.g, C.h, C.gg};
  return tri_atom_flags(c.f.phi, g.s, a, b, cz, xa, ya, beta, c.tan_a, c.zref,
                        fl);
}

double vol_res_trapezoid(int m_z, double beta_lo, double beta_hi,
                         const TrapCoefficients& C_minus,
                         const TrapCoefficients& C_m, const VoxelIndex& n,
                         double phi, const ScanGeometry& g) {
  if (m_z == 0 || m_z == 1)
    fail(ErrorCode::CentralRow,
         "residual band touching row edge 0 must be split at the central plane");
  const double lo =
      vol_rel_trapezoid(m_z - 1, beta_lo, beta_hi, C_minus, n, phi, g);
  const double hi = vol_rel_trapezoid(m_z, beta_lo, beta_hi, C_m, n, phi, g);
  double v = (m_z > 0) ? lo - hi : hi - lo;
  if (v < 0.0) {
    if (v < k_neg_clamp_3d)
      fail(ErrorCode::NonFinite, "negative residual volume beyond FP tolerance");
    v = 0.0;
  }
  return v;
}

std::vector<VoxelWeight> voxel_volume_factors(const VoxelIndex& n, double phi,
                                              const ScanGeometry& g) {
  const auto sw = detail::strip_sweep(g.face_x(n.ix), g.face_x(n.ix + 1),
                                      g.face_y(n.iy), g.face_y(n.iy + 1), phi,
                                      g.s, g.d, g.d_y);
  const double a = sw.f.x1 - sw.f.x0, b = sw.f.y1 - sw.f.y0;
  const double zb = g.face_z(n.iz), zt = g.face_z(n.iz + 1);
  const double cz = zt - zb;

  // Row-edge magnification range over the eight voxel corners (canonical
  // frame; z is untouched by the quarter turns).
  double m_min = 0.0, m_max = 0.0;
  bool first = true;
  for (double vx : {sw.f.x0, sw.f.x1})
    for (double vy : {sw.f.y0, sw.f.y1}) {
      const double depth = ray_depth(vx, vy, g.s, sw.f.phi);
      if (depth <= k_eps_den_rel * g.s)
        fail(ErrorCode::DegenerateGeometry, "voxel corner on the source plane");
      for (double vz : {zb, zt}) {
        const double m = g.sdd() / g.d_z * vz / depth;
        m_min = first ? m : std::min(m_min, m);
        m_max = first ? m : std::max(m_max, m);
        first = false;
      }
    }

  const int cell_lo = -g.n_det_y / 2, cell_hi = g.n_det_y / 2 - 1;
  const int row_lo = -g.n_det_z / 2, row_hi = g.n_det_z / 2 - 1;

  std::vector<VoxelWeight> out;
  std::size_t i = 0;
  while (i < sw.pieces.size()) {
    std::size_t j = i;
    while (j < sw.pieces.size() && sw.pieces[j].cell == sw.pieces[i].cell) ++j;
    const int cell = sw.pieces[i].cell;
    if (cell < cell_lo || cell > cell_hi) {
      i = j;
      continue;
    }

    double w2d = 0.0;
    for (std::size_t k = i; k < j; ++k)
      w2d += detail::piece_area(sw, sw.pieces[k], g.s);
    if (w2d < 0.0) w2d = 0.0;

    // Cumulative atom over this cell's pieces at row-edge slope k, apex zref.
    auto atom_sum = [&](double tan_a, double zref) {
      double v = 0.0;
      for (std::size_t k = i; k < j; ++k) {
        const auto& p = sw.pieces[k];
        switch (p.kind) {
          case 0:
            v += detail::tri_atom_cum(sw.f.phi, g.s, a, b, cz, p.apex_x,
                                      p.apex_y, p.b_hi, tan_a, zref) -
                 detail::tri_atom_cum(sw.f.phi, g.s, a, b, cz, p.apex_x,
                                      p.apex_y, p.b_lo, tan_a, zref);
            break;
          case 1:
            v += detail::trap_atom(sw.f.phi, g.s, a, b, cz, sw.f.x0, sw.f.x1,
                                   p.b_lo, p.b_hi, tan_a, zref);
            break;
          default:
            v += detail::tri_atom_cum(sw.f.phi, g.s, a, b, cz, p.apex_x,
                                      p.apex_y, p.b_lo, tan_a, zref) -
                 detail::tri_atom_cum(sw.f.phi, g.s, a, b, cz, p.apex_x,
                                      p.apex_y, p.b_hi, tan_a, zref);
        }
      }
      return v;
    };

    // Fraction of this cell's strip that lies above row edge k.
    auto above = [&](double k) {
      if (k <= m_min) return w2d;
      if (k >= m_max) return 0.0;
      if (k == 0.0) {
        if (zb >= 0.0) return w2d;
        if (zt <= 0.0) return 0.0;
        return w2d * zt / (zt - zb);
      }
      if (k > 0.0) {
        const double tan_a = k * g.d_z / g.sdd();
        return atom_sum(tan_a, zt) - atom_sum(tan_a, zb);
      }
      const double tan_a = -k * g.d_z / g.sdd();
      return w2d - (atom_sum(tan_a, -zb) - atom_sum(tan_a, -zt));
    };

    const int k_lo = std::max((int)std::floor(m_min), row_lo);
    const int k_hi = std::min((int)std::ceil(m_max) - 1, row_hi);
    if (k_hi < k_lo) {
      i = j;
      continue;
    }
    std::vector<double> edge_above(k_hi - k_lo + 2);
    for (int L = k_lo; L <= k_hi + 1; ++L)
      edge_above[L - k_lo] = above((double)L);
    for (int L = k_lo; L <= k_hi; ++L) {
      const double v = edge_above[L - k_lo] - edge_above[L - k_lo + 1];
      if (v > k_eps_weight) {
        out.push_back({cell, L, v});
      } else if (v < k_neg_clamp_3d) {
        fail(ErrorCode::NonFinite, "negative volume weight beyond FP tolerance");
      }
    }
    i = j;
  }
  return out;
}

}  // namespace ctsm
