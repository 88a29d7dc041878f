#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ctsm/geometry.hpp"
#include "ctsm/projector.hpp"

namespace ctsm {

// Scan + solver settings parsed from a flat key=value file.
struct RunConfig {
  ScanGeometry geom;
  double lambda = 1e-4;
  int max_iter = 1000;
  double tol = 1e-9;
  double sigma = 0.0;
  std::uint64_t seed = 12345;
};

// Accepts `key = value` lines, blank lines and '#' comments. Unknown or
// duplicate keys raise InvalidConfig. Required keys:
// s, d, dy, ndy, np, a, b, nx, ny.
RunConfig parse_config_text(const std::string& text);
RunConfig parse_config_file(const std::string& path);
std::string config_to_text(const RunConfig& cfg);

// Sparse matrix container, format tag "CSM1": magic, little-endian u64
// n_rows / n_cols / nnz / meta_len, the metadata bytes, then
// row_start[n_rows+1] (u64), col[nnz] (u64 on disk), val[nnz] (f64).
// Round-trips bit exactly; columns >= 2^32 are rejected on read.
void write_matrix(const std::string& path, const SparseSystemMatrix& w);
SparseSystemMatrix read_matrix(const std::string& path);

// Dense tensor container, format tag "CTT1": magic, u32 rank, u64 dims[rank],
// f64 payload in row-major order (the last dimension varies fastest).
void write_tensor(const std::string& path,
                  const std::vector<std::uint64_t>& dims,
                  const std::vector<double>& data);
std::vector<double> read_tensor(const std::string& path,
                                std::vector<std::uint64_t>* dims);

// 8-bit grayscale PNG; the value range [lo, hi] maps linearly onto [0, 255].
// values is row-major, top row first. Returns the {lo, hi} actually used.
std::pair<double, double> write_png_gray(const std::string& path, int width,
                                         int height,
                                         const std::vector<double>& values);

void write_csv(const std::string& path, const std::string& header,
               const std::vector<std::vector<double>>& rows);

// Value of `key` in a block of key=value lines, or "" when absent.
std::string meta_value(const std::string& meta, const std::string& key);

}  // namespace ctsm
