#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ctsm/geometry.hpp"

namespace ctsm {

enum class MatrixMode {
  consistent,  // exact area/volume fractions
  line,        // single center-ray intersection lengths
  multiline,   // average of k (2D) or k*k (3D) ray intersection lengths
};

MatrixMode parse_matrix_mode(const std::string& text, int* k);
std::string matrix_mode_name(MatrixMode mode, int k);

// Compressed sparse row system matrix. Rows are measurements ordered
// angle-major, then detector raster (z-major, y fastest); columns are voxels
// ordered z-major, then y, with x fastest. Column indices are stored in 32
// bits in memory (grids above 2^32 voxels are rejected); the on-disk format
// widens them to 64 bits.
struct SparseSystemMatrix {
  std::uint64_t n_rows = 0;
  std::uint64_t n_cols = 0;
  std::vector<std::uint64_t> row_start;  // size n_rows + 1
  std::vector<std::uint32_t> col;
  std::vector<double> val;
  std::string meta;  // key=value lines (geometry, mode, norm estimate)

  std::uint64_t nnz() const { return col.size(); }
};

// Assembles the system matrix for every angle of the scan. Deterministic for
// any thread count: each angle block is built independently and concatenated
// in order. Memory use is estimated from the first angle block and checked
// against `memory_budget_bytes` before full assembly.
SparseSystemMatrix build_system_matrix(const ScanGeometry& g, MatrixMode mode,
                                       int k = 1, int threads = 1,
                                       std::uint64_t memory_budget_bytes =
                                           5ull << 30);

// y = W x  (x over voxels, y over measurements).
std::vector<double> forward_project(const SparseSystemMatrix& w,
                                    const std::vector<double>& x);

// x = W^T y, evaluated as the exact transpose of the stored entries.
std::vector<double> back_project(const SparseSystemMatrix& w,
                                 const std::vector<double>& y);

// Forward projection without storing the matrix (weights are regenerated on
// the fly); agrees with forward_project(build_system_matrix(...)) to 1e-12.
std::vector<double> forward_project_matrix_free(const ScanGeometry& g,
                                                MatrixMode mode, int k,
                                                const std::vector<double>& x,
                                                int threads = 1);

// Largest singular value estimate by power iteration on W^T W with a seeded
// start vector; `iters` applications, monotonically nondecreasing estimates.
double spectral_norm_power(const SparseSystemMatrix& w, int iters = 100,
                           std::uint64_t seed = 7);

void scale_values(SparseSystemMatrix* w, double factor);

// Per-voxel column sums for a single angle block (diagnostics/tests).
std::vector<double> angle_column_sums(const ScanGeometry& g, MatrixMode mode,
                                      int k, int angle_index);

namespace detail {
// Emits every (local row, column, weight) entry of one angle block.
// local row = raster detector index; column = voxel column. Entry order is
// deterministic but unspecified.
void angle_block_entries(
    const ScanGeometry& g, MatrixMode mode, int k, int angle_index,
    const std::function<void(std::uint32_t, std::uint32_t, double)>& emit);
}  // namespace detail

}  // namespace ctsm
