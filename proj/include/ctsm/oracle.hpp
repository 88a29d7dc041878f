#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>
#include <vector>

#include "ctsm/geometry.hpp"
#include "ctsm/projector.hpp"

namespace ctsm {

// Independent reference implementations used to validate the closed-form
// weights. These deliberately share no code with the weight formulas: the 2D
// reference clips polygons, the 3D references integrate rays numerically or
// sample points, and the dense helpers route through Eigen.

// Area fraction of the pixel [x0,x1]x[y0,y1] inside the fan wedge of detector
// cell `cell` (edges `cell` and `cell+1`), via half-plane clipping and the
// shoelace formula.
double clip_area_2d(double x0, double x1, double y0, double y1, double phi,
                    double s, double d, double d_y, int cell);

struct McEstimate {
  double value = 0;   // volume fraction estimate
  double std_err = 0; // binomial standard error
};

// Volume fraction of the voxel inside the cone wedge of detector cell
// (m_y, m_z) by uniform point sampling; deterministic for a given seed and
// independent of threading (16 fixed sub-streams seeded seed+shard).
McEstimate mc_volume_3d(double x0, double x1, double y0, double y1, double zb,
                        double zt, double phi, double s, double d, double d_y,
                        double d_z, int m_y, int m_z, std::uint64_t n_samples,
                        std::uint64_t seed);

// Volume fraction by dense ray integration: a k x k Gauss-Legendre grid of
// rays over the detector cell (clipped to the voxel's projected bounding box),
// each contributing its exact cubic ray-segment integral.
double multiline_volume_3d(double x0, double x1, double y0, double y1,
                           double zb, double zt, double phi, double s,
                           double d, double d_y, double d_z, int m_y, int m_z,
                           int k = 200);

// Gauss-Legendre nodes and weights on [-1, 1].
std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int k);

// ---- dense reference helpers (Eigen) ----------------------------------------

// Densifies a sparse matrix; rejects shapes above `max_entries` entries.
Eigen::MatrixXd to_dense(const SparseSystemMatrix& w,
                         std::uint64_t max_entries = 100000000ull);

double largest_singular_value_dense(const Eigen::MatrixXd& m);

// argmin_u 0.5 |W u - p|^2 + 0.5 lambda |u|^2 via the normal equations.
Eigen::VectorXd solve_normal_equations(const Eigen::MatrixXd& w,
                                       const Eigen::VectorXd& p,
                                       double lambda);

}  // namespace ctsm
