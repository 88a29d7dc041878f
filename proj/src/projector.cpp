#include "ctsm/projector.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <sstream>
#include <thread>

#include "ctsm/baseline.hpp"
#include "ctsm/phantoms.hpp"
#include "ctsm/weights2d.hpp"
#include "ctsm/weights3d.hpp"

namespace ctsm {

MatrixMode parse_matrix_mode(const std::string& text, int* k) {
  *k = 1;
  if (text == "consistent") return MatrixMode::consistent;
  if (text == "line") return MatrixMode::line;
  if (text.rfind("multiline:", 0) == 0) {
    try {
      *k = std::stoi(text.substr(10));
    } catch (const std::exception&) {
      fail(ErrorCode::InvalidConfig, "bad multiline ray count in '" + text + "'");
    }
    if (*k <= 0)
      fail(ErrorCode::InvalidConfig, "multiline ray count must be > 0");
    return MatrixMode::multiline;
  }
  fail(ErrorCode::InvalidConfig, "unknown matrix mode '" + text + "'");
}

std::string matrix_mode_name(MatrixMode mode, int k) {
  switch (mode) {
    case MatrixMode::consistent: return "consistent";
    case MatrixMode::line: return "line";
    case MatrixMode::multiline: return "multiline:" + std::to_string(k);
  }
  return "?";
}

namespace detail {

void angle_block_entries(
    const ScanGeometry& g, MatrixMode mode, int k, int angle_index,
    const std::function<void(std::uint32_t, std::uint32_t, double)>& emit) {
  const double phi = g.angle(angle_index);
  const auto raster = [&](int m_y, int m_z) {
    return (std::uint32_t)((m_z + g.n_det_z / 2) * g.n_det_y +
                           (m_y + g.n_det_y / 2));
  };
  if (mode == MatrixMode::consistent) {
    if (g.is_2d()) {
      for (int iy = 0; iy < g.n_y; ++iy)
        for (int ix = 0; ix < g.n_x; ++ix) {
          const VoxelIndex n{ix, iy, 0};
          const std::uint32_t col = (std::uint32_t)voxel_column(g, n);
          for (const CellWeight& cw : pixel_area_factors(n, phi, g))
            emit(raster(cw.m_y, 0), col, cw.w);
        }
    } else {
      for (int iz = 0; iz < g.n_z; ++iz)
        for (int iy = 0; iy < g.n_y; ++iy)
          for (int ix = 0; ix < g.n_x; ++ix) {
            const VoxelIndex n{ix, iy, iz};
            const std::uint32_t col = (std::uint32_t)voxel_column(g, n);
            for (const VoxelWeight& vw : voxel_volume_factors(n, phi, g))
              emit(raster(vw.m_y, vw.m_z), col, vw.w);
          }
    }
    return;
  }
  const int mz_lo = g.is_2d() ? 0 : -g.n_det_z / 2;
  const int mz_hi = g.is_2d() ? 0 : g.n_det_z / 2 - 1;
  for (int m_z = mz_lo; m_z <= mz_hi; ++m_z)
    for (int m_y = -g.n_det_y / 2; m_y < g.n_det_y / 2; ++m_y) {
      const std::vector<RayHit> hits =
          (mode == MatrixMode::line)
              ? line_weights(m_y, m_z, angle_index, g)
              : multiline_weights(m_y, m_z, angle_index, g, k);
      const std::uint32_t row = raster(m_y, m_z);
      for (const RayHit& h : hits) emit(row, h.col, h.len);
    }
}

}  // namespace detail

namespace {

using AngleBlock = std::vector<std::vector<std::pair<std::uint32_t, double>>>;

AngleBlock build_angle_block(const ScanGeometry& g, MatrixMode mode, int k,
                             int angle_index) {
  AngleBlock rows((std::size_t)g.n_det_y * g.n_det_z);
  detail::angle_block_entries(
      g, mode, k, angle_index,
      [&rows](std::uint32_t r, std::uint32_t c, double w) {
        rows[r].emplace_back(c, w);
      });
  for (auto& row : rows)
    std::stable_sort(row.begin(), row.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
  return rows;
}

std::uint64_t block_nnz(const AngleBlock& blk) {
  std::uint64_t n = 0;
  for (const auto& row : blk) n += row.size();
  return n;
}

// Runs fn(i) for i in [0, count) on `threads` workers in contiguous chunks,
// delivering results through collect(i, result) in index order.
template <typename Fn, typename Collect>
void ordered_parallel_for(int count, int threads, Fn fn, Collect collect) {
  threads = std::max(1, std::min(threads, count));
  if (threads == 1) {
    for (int i = 0; i < count; ++i) collect(i, fn(i));
    return;
  }
  for (int chunk = 0; chunk < count; chunk += threads) {
    const int n = std::min(threads, count - chunk);
    std::vector<decltype(fn(0))> results(n);
    std::vector<std::exception_ptr> errors(n);
    std::vector<std::thread> pool;
    for (int t = 0; t < n; ++t)
      pool.emplace_back([&, t]() {
        try {
          results[t] = fn(chunk + t);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    for (auto& th : pool) th.join();
    for (int t = 0; t < n; ++t) {
      if (errors[t]) std::rethrow_exception(errors[t]);
      collect(chunk + t, std::move(results[t]));
    }
  }
}

}  // namespace

SparseSystemMatrix build_system_matrix(const ScanGeometry& g, MatrixMode mode,
                                       int k, int threads,
                                       std::uint64_t memory_budget_bytes) {
  g.validate();
  if (g.n_voxels() > 0xffffffffull)
    fail(ErrorCode::TooLarge, "grid exceeds 2^32 voxel columns");
  SparseSystemMatrix w;
  w.n_rows = g.n_measurements();
  w.n_cols = g.n_voxels();
  w.row_start.assign(w.n_rows + 1, 0);

  // Estimate the total entry count from the first angle and check the budget.
  {
    const AngleBlock first = build_angle_block(g, mode, k, 0);
    const std::uint64_t est_nnz = block_nnz(first) * (std::uint64_t)g.n_angles;
    const std::uint64_t est_bytes =
        est_nnz * (sizeof(std::uint32_t) + sizeof(double)) +
        (w.n_rows + 1) * sizeof(std::uint64_t);
    if (est_bytes > memory_budget_bytes)
      fail(ErrorCode::OutOfMemory,
           "estimated " + std::to_string(est_nnz) + " entries (" +
               std::to_string(est_bytes >> 20) + " MiB) exceed the budget of " +
               std::to_string(memory_budget_bytes >> 20) + " MiB");
    w.col.reserve((std::size_t)(est_nnz + est_nnz / 32 + 1024));
    w.val.reserve(w.col.capacity());
  }

  const std::uint64_t rows_per_angle = (std::uint64_t)g.n_det_y * g.n_det_z;
  std::uint64_t next_row = 0;
  ordered_parallel_for(
      g.n_angles, threads,
      [&](int ip) { return build_angle_block(g, mode, k, ip); },
      [&](int /*ip*/, AngleBlock blk) {
        for (std::uint64_t r = 0; r < rows_per_angle; ++r) {
          const auto& row = blk[r];
          w.row_start[next_row + 1] = w.row_start[next_row] + row.size();
          for (const auto& [c, v] : row) {
            w.col.push_back(c);
            w.val.push_back(v);
          }
          ++next_row;
        }
      });

  if (w.nnz() == 0)
    fail(ErrorCode::ZeroMatrix, "system matrix has no entries");

  std::ostringstream meta;
  meta << "mode=" << matrix_mode_name(mode, k) << "\n";
  meta << "s=" << g.s << "\nd=" << g.d << "\ndy=" << g.d_y << "\ndz=" << g.d_z
       << "\nndy=" << g.n_det_y << "\nndz=" << g.n_det_z
       << "\nnp=" << g.n_angles << "\nangle_start=" << g.angle_start
       << "\nangle_end=" << g.angle_end << "\na=" << g.a << "\nb=" << g.b
       << "\nc=" << g.c << "\nnx=" << g.n_x << "\nny=" << g.n_y
       << "\nnz=" << g.n_z << "\n";
  w.meta = meta.str();
  return w;
}

std::vector<double> forward_project(const SparseSystemMatrix& w,
                                    const std::vector<double>& x) {
  if (x.size() != w.n_cols)
    fail(ErrorCode::DimensionMismatch, "image size does not match matrix columns");
  std::vector<double> y(w.n_rows, 0.0);
  for (std::uint64_t r = 0; r < w.n_rows; ++r) {
    double acc = 0.0;
    for (std::uint64_t j = w.row_start[r]; j < w.row_start[r + 1]; ++j)
      acc += w.val[j] * x[w.col[j]];
    y[r] = acc;
  }
  for (double v : y)
    if (!std::isfinite(v)) fail(ErrorCode::NonFinite, "forward projection not finite");
  return y;
}

std::vector<double> back_project(const SparseSystemMatrix& w,
                                 const std::vector<double>& y) {
  if (y.size() != w.n_rows)
    fail(ErrorCode::DimensionMismatch, "sinogram size does not match matrix rows");
  std::vector<double> x(w.n_cols, 0.0);
  for (std::uint64_t r = 0; r < w.n_rows; ++r) {
    const double yr = y[r];
    if (yr == 0.0) continue;
    for (std::uint64_t j = w.row_start[r]; j < w.row_start[r + 1]; ++j)
      x[w.col[j]] += w.val[j] * yr;
  }
  for (double v : x)
    if (!std::isfinite(v)) fail(ErrorCode::NonFinite, "back projection not finite");
  return x;
}

std::vector<double> forward_project_matrix_free(const ScanGeometry& g,
                                                MatrixMode mode, int k,
                                                const std::vector<double>& x,
                                                int threads) {
  g.validate();
  if (x.size() != g.n_voxels())
    fail(ErrorCode::DimensionMismatch, "image size does not match the grid");
  std::vector<double> y(g.n_measurements(), 0.0);
  const std::uint64_t rows_per_angle = (std::uint64_t)g.n_det_y * g.n_det_z;
  ordered_parallel_for(
      g.n_angles, threads,
      [&](int ip) {
        std::vector<double> block(rows_per_angle, 0.0);
        detail::angle_block_entries(
            g, mode, k, ip,
            [&](std::uint32_t r, std::uint32_t c, double wv) {
              block[r] += wv * x[c];
            });
        return block;
      },
      [&](int ip, std::vector<double> block) {
        std::copy(block.begin(), block.end(),
                  y.begin() + (std::size_t)ip * rows_per_angle);
      });
  return y;
}

double spectral_norm_power(const SparseSystemMatrix& w, int iters,
                           std::uint64_t seed) {
  if (w.nnz() == 0) fail(ErrorCode::ZeroMatrix, "matrix has no entries");
  std::vector<double> v = normal_samples(w.n_cols, seed);
  double nrm = 0.0;
  for (double x : v) nrm += x * x;
  nrm = std::sqrt(nrm);
  for (double& x : v) x /= nrm;
  double lam = 0.0;
  for (int it = 0; it < iters; ++it) {
    std::vector<double> u = back_project(w, forward_project(w, v));
    lam = 0.0;
    for (double x : u) lam += x * x;
    lam = std::sqrt(lam);
    if (lam == 0.0) fail(ErrorCode::ZeroMatrix, "power iteration collapsed");
    for (std::uint64_t i = 0; i < w.n_cols; ++i) v[i] = u[i] / lam;
  }
  return std::sqrt(lam);
}

void scale_values(SparseSystemMatrix* w, double factor) {
  if (!std::isfinite(factor))
    fail(ErrorCode::NonFinite, "scale factor must be finite");
  for (double& v : w->val) v *= factor;
}

std::vector<double> angle_column_sums(const ScanGeometry& g, MatrixMode mode,
                                      int k, int angle_index) {
  std::vector<double> sums(g.n_voxels(), 0.0);
  detail::angle_block_entries(
      g, mode, k, angle_index,
      [&](std::uint32_t, std::uint32_t c, double wv) { sums[c] += wv; });
  return sums;
}

}  // namespace ctsm
