#pragma once

#include <cstdint>
#include <vector>

#include "ctsm/projector.hpp"

namespace ctsm {

// Checkerboard of 4x4 (4x4x4 in 3D) equal blocks over an n^2 / n^3 grid,
// value 1 in the block containing the minimal corner, 0 elsewhere.
// n must be a positive multiple of 4. Storage is x fastest, then y, then z.
std::vector<double> checkerboard_2d(int n);
std::vector<double> checkerboard_3d(int n);

// Modified Shepp-Logan head phantom sampled at pixel centers, with the grid
// mapped onto [-1,1]^2. Storage is x fastest.
std::vector<double> shepp_logan_2d(int n_x, int n_y);

// Standard normal draws from mt19937_64 via the Box-Muller transform
// (cosine branch only; two engine outputs per sample). Deterministic in seed.
std::vector<double> normal_samples(std::size_t n, std::uint64_t seed);

// p = W u + sigma * noise with standard normal noise. The caller passes the
// matrix already scaled to unit spectral norm when unit-scale data is wanted.
std::vector<double> make_sinogram(const SparseSystemMatrix& w,
                                  const std::vector<double>& u, double sigma,
                                  std::uint64_t seed);

}  // namespace ctsm
