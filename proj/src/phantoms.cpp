#include "ctsm/phantoms.hpp"

#include <cmath>
#include <random>

#include "ctsm/common.hpp"
#include "ctsm/geometry.hpp"

namespace ctsm {

namespace {

void require_blocks(int n) {
  if (n <= 0 || n % 4 != 0)
    fail(ErrorCode::InvalidSpec, "checkerboard size must be a positive multiple of 4");
}

}  // namespace

std::vector<double> checkerboard_2d(int n) {
  require_blocks(n);
  const int bs = n / 4;
  std::vector<double> u((std::size_t)n * n);
  for (int iy = 0; iy < n; ++iy)
    for (int ix = 0; ix < n; ++ix)
      u[(std::size_t)iy * n + ix] = 1.0 - (ix / bs + iy / bs) % 2;
  return u;
}

std::vector<double> checkerboard_3d(int n) {
  require_blocks(n);
  const int bs = n / 4;
  std::vector<double> u((std::size_t)n * n * n);
  for (int iz = 0; iz < n; ++iz)
    for (int iy = 0; iy < n; ++iy)
      for (int ix = 0; ix < n; ++ix)
        u[((std::size_t)iz * n + iy) * n + ix] =
            1.0 - (ix / bs + iy / bs + iz / bs) % 2;
  return u;
}

std::vector<double> shepp_logan_2d(int n_x, int n_y) {
  if (n_x <= 0 || n_y <= 0)
    fail(ErrorCode::InvalidSpec, "phantom grid must be positive");
  struct Ellipse {
    double value, ax, ay, x0, y0, angle_deg;
  };
  static const Ellipse table[] = {
      {1.0, 0.69, 0.92, 0.0, 0.0, 0.0},
      {-0.8, 0.6624, 0.8740, 0.0, -0.0184, 0.0},
      {-0.2, 0.1100, 0.3100, 0.22, 0.0, -18.0},
      {-0.2, 0.1600, 0.4100, -0.22, 0.0, 18.0},
      {0.1, 0.2100, 0.2500, 0.0, 0.35, 0.0},
      {0.1, 0.0460, 0.0460, 0.0, 0.1, 0.0},
      {0.1, 0.0460, 0.0460, 0.0, -0.1, 0.0},
      {0.1, 0.0460, 0.0230, -0.08, -0.605, 0.0},
      {0.1, 0.0230, 0.0230, 0.0, -0.605, 0.0},
      {0.1, 0.0230, 0.0460, 0.06, -0.605, 0.0},
  };
  std::vector<double> u((std::size_t)n_x * n_y, 0.0);
  for (int iy = 0; iy < n_y; ++iy)
    for (int ix = 0; ix < n_x; ++ix) {
      const double x = (2.0 * (ix + 0.5) - n_x) / n_x;
      const double y = (2.0 * (iy + 0.5) - n_y) / n_y;
      double v = 0.0;
      for (const Ellipse& e : table) {
        const double th = e.angle_deg * k_pi / 180.0;
        const double dx = x - e.x0, dy = y - e.y0;
        const double xr = dx * std::cos(th) + dy * std::sin(th);
        const double yr = -dx * std::sin(th) + dy * std::cos(th);
        if (sq(xr / e.ax) + sq(yr / e.ay) <= 1.0) v += e.value;
      }
      u[(std::size_t)iy * n_x + ix] = v;
    }
  return u;
}

std::vector<double> normal_samples(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u1 = ((rng() >> 11) + 1.0) * 0x1.0p-53;  // in (0, 1]
    const double u2 = (rng() >> 11) * 0x1.0p-53;          // in [0, 1)
    out[i] = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * k_pi * u2);
  }
  return out;
}

std::vector<double> make_sinogram(const SparseSystemMatrix& w,
                                  const std::vector<double>& u, double sigma,
                                  std::uint64_t seed) {
  std::vector<double> p = forward_project(w, u);
  if (sigma != 0.0) {
    const std::vector<double> eps = normal_samples(p.size(), seed);
    for (std::size_t i = 0; i < p.size(); ++i) p[i] += sigma * eps[i];
  }
  return p;
}

}  // namespace ctsm
