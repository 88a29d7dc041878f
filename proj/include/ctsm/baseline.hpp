#pragma once

#include <cstdint>
#include <vector>

#include "ctsm/geometry.hpp"

namespace ctsm {

struct RayHit {
  std::uint32_t col = 0;  // voxel column index
  double len = 0;         // intersection length (physical units)
};

// Exact intersection lengths of the ray from the source to the center of
// detector cell (m_y, m_z) with every voxel it crosses, by incremental grid
// traversal. Entries are ordered along the ray; the summed lengths equal the
// in-grid chord length of the ray.
std::vector<RayHit> line_weights(int m_y, int m_z, int angle_index,
                                 const ScanGeometry& g);

// Average of k (2D) or k*k (3D) uniformly placed rays across the detector
// cell; per-voxel lengths are merged and ordered by column.
std::vector<RayHit> multiline_weights(int m_y, int m_z, int angle_index,
                                      const ScanGeometry& g, int k);

}  // namespace ctsm
