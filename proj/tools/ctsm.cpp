// Command line front end: build system matrices, simulate data, reconstruct,
// and cross-validate the closed-form weights against independent references.
#include <CLI11.hpp>

#include <chrono>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "ctsm/baseline.hpp"
#include "ctsm/geometry.hpp"
#include "ctsm/io.hpp"
#include "ctsm/phantoms.hpp"
#include "ctsm/projector.hpp"
#include "ctsm/solver.hpp"
#include "ctsm/validate.hpp"

namespace {

using namespace ctsm;

int exit_code_for(ErrorCode c) {
  switch (c) {
    case ErrorCode::InvalidConfig:
    case ErrorCode::InvalidSpec:
      return 64;
    case ErrorCode::DimensionMismatch:
    case ErrorCode::TooLarge:
    case ErrorCode::ZeroMatrix:
    case ErrorCode::NonFinite:
      return 65;
    case ErrorCode::DegenerateGeometry:
    case ErrorCode::RayParallelToFace:
    case ErrorCode::SingularPhi:
    case ErrorCode::CentralRow:
    case ErrorCode::ZRestrictionViolation:
      return 66;
    case ErrorCode::OutOfMemory:
      return 71;
    case ErrorCode::IoFailure:
      return 74;
  }
  return 70;
}

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
  }
};

std::string fmt(double v, int prec = 17) {
  std::ostringstream os;
  os << std::setprecision(prec) << v;
  return os.str();
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string item;
  while (std::getline(in, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::vector<std::uint64_t> volume_dims(const ScanGeometry& g) {
  if (g.is_2d()) return {(std::uint64_t)g.n_y, (std::uint64_t)g.n_x};
  return {(std::uint64_t)g.n_z, (std::uint64_t)g.n_y, (std::uint64_t)g.n_x};
}

std::vector<std::uint64_t> sino_dims(const ScanGeometry& g) {
  return {(std::uint64_t)g.n_angles, (std::uint64_t)g.n_det_z,
          (std::uint64_t)g.n_det_y};
}

ScanGeometry geom_from_meta(const std::string& meta) {
  const auto need = [&](const char* key) {
    const std::string v = meta_value(meta, key);
    if (v.empty())
      fail(ErrorCode::InvalidConfig,
           std::string("matrix metadata lacks key '") + key + "'");
    return v;
  };
  ScanGeometry g;
  g.s = std::stod(need("s"));
  g.d = std::stod(need("d"));
  g.d_y = std::stod(need("dy"));
  g.d_z = std::stod(need("dz"));
  g.n_det_y = std::stoi(need("ndy"));
  g.n_det_z = std::stoi(need("ndz"));
  g.n_angles = std::stoi(need("np"));
  g.angle_start = std::stod(need("angle_start"));
  g.angle_end = std::stod(need("angle_end"));
  g.a = std::stod(need("a"));
  g.b = std::stod(need("b"));
  g.c = std::stod(need("c"));
  g.n_x = std::stoi(need("nx"));
  g.n_y = std::stoi(need("ny"));
  g.n_z = std::stoi(need("nz"));
  g.validate();
  return g;
}

// Loads a stored matrix and rescales it to unit spectral norm using the norm
// recorded at build time (recomputed if the file lacks one).
std::pair<SparseSystemMatrix, double> load_normalized(const std::string& path) {
  SparseSystemMatrix w = read_matrix(path);
  double norm = 0;
  const std::string sv = meta_value(w.meta, "spectral_norm");
  if (sv.empty()) {
    std::cout << "matrix has no stored spectral norm; estimating...\n";
    norm = spectral_norm_power(w);
  } else {
    norm = std::stod(sv);
  }
  if (!(norm > 0) || !std::isfinite(norm))
    fail(ErrorCode::InvalidSpec, "matrix spectral norm must be positive");
  scale_values(&w, 1.0 / norm);
  return {std::move(w), norm};
}

double mse(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += sq(a[i] - b[i]);
  return s / (double)a.size();
}

std::vector<double> make_phantom(const ScanGeometry& g,
                                 const std::string& type) {
  if (type == "checkerboard") {
    if (g.is_2d()) {
      if (g.n_x != g.n_y)
        fail(ErrorCode::InvalidSpec, "checkerboard needs a square grid");
      return checkerboard_2d(g.n_x);
    }
    if (g.n_x != g.n_y || g.n_x != g.n_z)
      fail(ErrorCode::InvalidSpec, "checkerboard needs a cubic grid");
    return checkerboard_3d(g.n_x);
  }
  if (type == "shepp-logan") {
    if (!g.is_2d())
      fail(ErrorCode::InvalidSpec, "the head phantom is two-dimensional");
    return shepp_logan_2d(g.n_x, g.n_y);
  }
  fail(ErrorCode::InvalidConfig, "unknown phantom type '" + type + "'");
}

void print_report(const SuiteReport& r) {
  std::cout << std::left << std::setw(12) << r.suite << " cases " << std::setw(6)
            << r.cases << " comparisons " << std::setw(8) << r.comparisons
            << " max err " << std::setw(13) << fmt(r.max_err, 6) << " tol "
            << std::setw(9) << fmt(r.tol, 3);
  if (r.trap_patterns || r.tri_patterns)
    std::cout << " patterns " << r.trap_patterns << "/7 trap, "
              << r.tri_patterns << "/8 tri";
  std::cout << (r.pass() ? "  [ok]" : "  [FAILED]") << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact fan/cone-beam system matrices and reconstruction"};
  app.require_subcommand(1);
  int threads = 1;
  app.add_option("--threads", threads, "worker threads for matrix assembly")
      ->capture_default_str();

  int rc = 0;

  // ---- build-sm -------------------------------------------------------------
  auto* sm = app.add_subcommand("build-sm", "assemble and store a system matrix");
  sm->fallthrough();
  std::string sm_config, sm_mode = "consistent", sm_out;
  sm->add_option("--config", sm_config, "scan configuration file")
      ->required()
      ->check(CLI::ExistingFile);
  sm->add_option("--mode", sm_mode,
                 "consistent | line | multiline:K")
      ->capture_default_str();
  sm->add_option("--out", sm_out, "output matrix file")->required();
  sm->callback([&]() {
    const RunConfig cfg = parse_config_file(sm_config);
    int k = 1;
    const MatrixMode mode = parse_matrix_mode(sm_mode, &k);
    Timer tb;
    SparseSystemMatrix w = build_system_matrix(cfg.geom, mode, k, threads);
    std::cout << "rows " << w.n_rows << ", cols " << w.n_cols << ", nnz "
              << w.nnz() << "\n";
    std::cout << "build time: " << fmt(tb.seconds(), 4) << " s\n";
    Timer tn;
    const double norm = spectral_norm_power(w, 100, 7);
    std::cout << "spectral norm: " << fmt(norm) << " (" << fmt(tn.seconds(), 4)
              << " s)\n";
    w.meta += "spectral_norm=" + fmt(norm) + "\n";
    write_matrix(sm_out, w);
    std::cout << "wrote " << sm_out << "\n";
  });

  // ---- phantom --------------------------------------------------------------
  auto* ph = app.add_subcommand("phantom", "generate a test object");
  ph->fallthrough();
  std::string ph_config, ph_type = "checkerboard", ph_out;
  ph->add_option("--config", ph_config, "scan configuration file")
      ->required()
      ->check(CLI::ExistingFile);
  ph->add_option("--type", ph_type, "checkerboard | shepp-logan")
      ->capture_default_str()
      ->check(CLI::IsMember({"checkerboard", "shepp-logan"}));
  ph->add_option("--out", ph_out, "output tensor file")->required();
  ph->callback([&]() {
    const RunConfig cfg = parse_config_file(ph_config);
    const std::vector<double> u = make_phantom(cfg.geom, ph_type);
    write_tensor(ph_out, volume_dims(cfg.geom), u);
    std::cout << "wrote " << ph_out << " (" << u.size() << " voxels)\n";
  });

  // ---- project --------------------------------------------------------------
  auto* pr = app.add_subcommand(
      "project", "simulate measurements p = W u + sigma * noise "
                 "(W rescaled to unit spectral norm)");
  pr->fallthrough();
  std::string pr_matrix, pr_phantom, pr_out;
  double pr_sigma = 0.0;
  std::uint64_t pr_seed = 12345;
  pr->add_option("--matrix", pr_matrix, "system matrix file")
      ->required()
      ->check(CLI::ExistingFile);
  pr->add_option("--phantom", pr_phantom, "object tensor file")
      ->required()
      ->check(CLI::ExistingFile);
  pr->add_option("--out", pr_out, "output sinogram tensor")->required();
  pr->add_option("--sigma", pr_sigma, "noise standard deviation")
      ->capture_default_str();
  pr->add_option("--seed", pr_seed, "noise seed")->capture_default_str();
  pr->callback([&]() {
    auto [w, norm] = load_normalized(pr_matrix);
    const ScanGeometry g = geom_from_meta(w.meta);
    std::vector<std::uint64_t> dims;
    const std::vector<double> u = read_tensor(pr_phantom, &dims);
    const std::vector<double> p = make_sinogram(w, u, pr_sigma, pr_seed);
    write_tensor(pr_out, sino_dims(g), p);
    std::cout << "spectral norm used: " << fmt(norm) << "\n";
    std::cout << "wrote " << pr_out << " (" << g.n_angles << " x " << g.n_det_z
              << " x " << g.n_det_y << ")\n";
  });

  // ---- reconstruct ----------------------------------------------------------
  auto* rec = app.add_subcommand(
      "reconstruct", "Tikhonov-regularized accelerated gradient reconstruction");
  rec->fallthrough();
  std::string rec_config, rec_matrix, rec_data, rec_out, rec_trace;
  rec->add_option("--config", rec_config, "scan configuration file")
      ->required()
      ->check(CLI::ExistingFile);
  rec->add_option("--matrix", rec_matrix, "system matrix file")
      ->required()
      ->check(CLI::ExistingFile);
  rec->add_option("--data", rec_data, "sinogram tensor file")
      ->required()
      ->check(CLI::ExistingFile);
  rec->add_option("--out", rec_out, "output volume tensor")->required();
  rec->add_option("--trace", rec_trace, "per-iteration CSV trace");
  rec->callback([&]() {
    const RunConfig cfg = parse_config_file(rec_config);
    auto [w, norm] = load_normalized(rec_matrix);
    if (w.n_cols != cfg.geom.n_voxels())
      fail(ErrorCode::DimensionMismatch,
           "matrix columns do not match the configured grid");
    std::vector<std::uint64_t> dims;
    const std::vector<double> p = read_tensor(rec_data, &dims);
    const SolveOptions opt{cfg.lambda, cfg.max_iter, cfg.tol};
    Timer ts;
    const SolveResult res = nag_tikhonov(w, p, opt, !rec_trace.empty());
    std::cout << "iterations: " << res.iterations
              << (res.converged ? " (converged)" : " (max iterations reached)")
              << ", " << fmt(ts.seconds(), 4) << " s\n";
    write_tensor(rec_out, volume_dims(cfg.geom), res.u);
    std::cout << "wrote " << rec_out << "\n";
    if (!rec_trace.empty()) {
      std::vector<std::vector<double>> rows;
      for (const SolveTraceRow& t : res.trace)
        rows.push_back({(double)t.iter, t.objective, t.grad_norm_sq});
      write_csv(rec_trace, "iter,objective,grad_norm_sq", rows);
      std::cout << "wrote " << rec_trace << "\n";
    }
    if (!res.converged) rc = 2;
  });

  // ---- validate -------------------------------------------------------------
  auto* va = app.add_subcommand(
      "validate", "cross-check weights against independent references");
  va->fallthrough();
  std::string va_suite, va_report;
  int va_samples = 0;
  std::uint64_t va_seed = 7;
  va->add_option("--suite", va_suite, "weights2d | weights3d | adjoint | identities")
      ->required()
      ->check(CLI::IsMember({"weights2d", "weights3d", "adjoint", "identities"}));
  va->add_option("--samples", va_samples, "cases per suite (0 = default)")
      ->capture_default_str();
  va->add_option("--seed", va_seed, "sampling seed")->capture_default_str();
  va->add_option("--report", va_report, "per-case CSV report");
  va->callback([&]() {
    std::vector<SuiteReport> reports;
    if (va_suite == "weights2d") {
      const int n = va_samples > 0 ? va_samples : 200;
      reports.push_back(check_weights2d_oracle(n, va_seed));
      reports.push_back(check_partition_2d(n, va_seed + 1));
    } else if (va_suite == "weights3d") {
      reports.push_back(check_weights3d_oracle(
          va_samples > 0 ? va_samples : 25, va_seed, 200000, 100));
      reports.push_back(
          check_partition_3d(va_samples > 0 ? va_samples : 200, va_seed + 1));
      reports.push_back(check_singular_continuity(
          va_samples > 0 ? va_samples : 50, va_seed + 2));
    } else if (va_suite == "adjoint") {
      const int n = va_samples > 0 ? va_samples : 50;
      reports.push_back(check_adjoint(n, va_seed, false));
      reports.push_back(check_adjoint(n, va_seed, true));
    } else {
      reports.push_back(
          check_identities(va_samples > 0 ? va_samples : 2000, va_seed));
    }
    bool all_ok = true;
    for (const SuiteReport& r : reports) {
      print_report(r);
      all_ok = all_ok && r.pass();
    }
    if (!va_report.empty()) {
      std::vector<std::vector<double>> rows;
      for (std::size_t si = 0; si < reports.size(); ++si)
        for (std::size_t ci = 0; ci < reports[si].errors.size(); ++ci)
          rows.push_back({(double)si, (double)ci, reports[si].errors[ci]});
      write_csv(va_report, "suite_index,case,err", rows);
      std::cout << "wrote " << va_report << "\n";
    }
    if (!all_ok) rc = 1;
  });

  // ---- bench ----------------------------------------------------------------
  auto* be = app.add_subcommand(
      "bench", "build/solve timings and reconstruction error per matrix mode "
               "(data simulated with the consistent matrix)");
  be->fallthrough();
  std::string be_config, be_modes = "consistent,line", be_lambdas = "1e-4",
              be_out;
  be->add_option("--config", be_config, "scan configuration file")
      ->required()
      ->check(CLI::ExistingFile);
  be->add_option("--modes", be_modes, "comma-separated matrix modes")
      ->capture_default_str();
  be->add_option("--lambdas", be_lambdas, "comma-separated Tikhonov weights")
      ->capture_default_str();
  be->add_option("--out", be_out, "output CSV");
  be->callback([&]() {
    const RunConfig cfg = parse_config_file(be_config);
    const ScanGeometry& g = cfg.geom;
    const std::vector<double> u_true = make_phantom(
        g, g.is_2d() && g.n_x % 4 != 0 ? "shepp-logan" : "checkerboard");

    Timer tc;
    SparseSystemMatrix wc =
        build_system_matrix(g, MatrixMode::consistent, 1, threads);
    const double consistent_build_s = tc.seconds();
    const std::uint64_t consistent_nnz = wc.nnz();
    const double norm_c = spectral_norm_power(wc);
    scale_values(&wc, 1.0 / norm_c);
    const std::vector<double> p = make_sinogram(wc, u_true, cfg.sigma, cfg.seed);

    std::ostringstream csv;
    csv << "mode,k,lambda,nnz,build_seconds,solve_seconds,iterations,converged,mse\n";
    std::cout << std::left << std::setw(14) << "mode" << std::setw(10)
              << "lambda" << std::setw(12) << "nnz" << std::setw(10) << "build"
              << std::setw(10) << "solve" << std::setw(7) << "iters"
              << "mse\n";
    for (const std::string& mode_str : split_list(be_modes)) {
      int k = 1;
      const MatrixMode mode = parse_matrix_mode(mode_str, &k);
      SparseSystemMatrix w;
      double build_s = 0;
      std::uint64_t nnz = 0;
      if (mode == MatrixMode::consistent) {
        w = wc;  // already normalized
        build_s = consistent_build_s;
        nnz = consistent_nnz;
      } else {
        Timer tb;
        w = build_system_matrix(g, mode, k, threads);
        build_s = tb.seconds();
        nnz = w.nnz();
        scale_values(&w, 1.0 / spectral_norm_power(w));
      }
      for (const std::string& ls : split_list(be_lambdas)) {
        const double lam = std::stod(ls);
        Timer tsv;
        const SolveResult res =
            nag_tikhonov(w, p, {lam, cfg.max_iter, cfg.tol});
        const double solve_s = tsv.seconds();
        const double err = mse(res.u, u_true);
        csv << mode_str << "," << k << "," << fmt(lam) << "," << nnz << ","
            << fmt(build_s, 6) << "," << fmt(solve_s, 6) << ","
            << res.iterations << "," << (res.converged ? 1 : 0) << ","
            << fmt(err) << "\n";
        std::cout << std::left << std::setw(14) << mode_str << std::setw(10)
                  << fmt(lam, 3) << std::setw(12) << nnz << std::setw(10)
                  << fmt(build_s, 4) << std::setw(10) << fmt(solve_s, 4)
                  << std::setw(7) << res.iterations << fmt(err, 6) << "\n";
      }
    }
    if (!be_out.empty()) {
      std::ofstream os(be_out);
      if (!os) fail(ErrorCode::IoFailure, "cannot open " + be_out);
      os << csv.str();
      std::cout << "wrote " << be_out << "\n";
    }
  });

  // ---- export-png -----------------------------------------------------------
  auto* ex = app.add_subcommand("export-png", "render a tensor as 8-bit PNG");
  ex->fallthrough();
  std::string ex_in, ex_out;
  int ex_slice = -1;
  ex->add_option("--in", ex_in, "input tensor file")
      ->required()
      ->check(CLI::ExistingFile);
  ex->add_option("--out", ex_out, "output PNG file")->required();
  ex->add_option("--slice", ex_slice,
                 "leading-dimension slice for rank-3 tensors (default middle)");
  ex->callback([&]() {
    std::vector<std::uint64_t> dims;
    const std::vector<double> data = read_tensor(ex_in, &dims);
    std::vector<double> plane;
    int wd = 0, ht = 0;
    if (dims.size() == 2) {
      ht = (int)dims[0];
      wd = (int)dims[1];
      plane = data;
    } else if (dims.size() == 3) {
      const int ns = (int)dims[0];
      const int s = ex_slice < 0 ? ns / 2 : ex_slice;
      if (s >= ns) fail(ErrorCode::InvalidConfig, "slice index out of range");
      ht = (int)dims[1];
      wd = (int)dims[2];
      plane.assign(data.begin() + (std::size_t)s * ht * wd,
                   data.begin() + (std::size_t)(s + 1) * ht * wd);
    } else {
      fail(ErrorCode::InvalidSpec, "only rank-2/3 tensors can be rendered");
    }
    // Flip vertically: tensor rows ascend in +y, PNG rows go top-down.
    std::vector<double> flipped((std::size_t)wd * ht);
    for (int r = 0; r < ht; ++r)
      std::copy(plane.begin() + (std::size_t)(ht - 1 - r) * wd,
                plane.begin() + (std::size_t)(ht - r) * wd,
                flipped.begin() + (std::size_t)r * wd);
    const auto [lo, hi] = write_png_gray(ex_out, wd, ht, flipped);
    std::cout << "wrote " << ex_out << " (" << wd << "x" << ht << "), values ["
              << fmt(lo, 6) << ", " << fmt(hi, 6) << "] -> [0, 255]\n";
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 64;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::bad_alloc&) {
    std::cerr << "error: OutOfMemory: allocation failed\n";
    return 71;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 70;
  }
  return rc;
}
