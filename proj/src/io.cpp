#include "ctsm/io.hpp"

#include <zlib.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

namespace ctsm {

static_assert(std::endian::native == std::endian::little,
              "container formats assume a little-endian host");

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double x = 0;
  try {
    x = std::stod(v, &used);
  } catch (const std::exception&) {
    fail(ErrorCode::InvalidConfig, "bad numeric value for '" + key + "'");
  }
  if (used != v.size())
    fail(ErrorCode::InvalidConfig, "trailing characters in value for '" + key + "'");
  return x;
}

long long to_int(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  long long x = 0;
  try {
    x = std::stoll(v, &used);
  } catch (const std::exception&) {
    fail(ErrorCode::InvalidConfig, "bad integer value for '" + key + "'");
  }
  if (used != v.size())
    fail(ErrorCode::InvalidConfig, "trailing characters in value for '" + key + "'");
  return x;
}

void put_u64(std::ostream& os, std::uint64_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
void put_u32(std::ostream& os, std::uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
std::uint64_t get_u64(std::istream& is) {
  std::uint64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}
std::uint32_t get_u32(std::istream& is) {
  std::uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}

void check_stream(const std::ios& s, const std::string& path,
                  const char* what) {
  if (!s) fail(ErrorCode::IoFailure, std::string(what) + " failed for " + path);
}

}  // namespace

RunConfig parse_config_text(const std::string& text) {
  RunConfig cfg;
  ScanGeometry& g = cfg.geom;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      fail(ErrorCode::InvalidConfig,
           "line " + std::to_string(line_no) + " has no '='");
    const std::string key = trim(t.substr(0, eq));
    const std::string val = trim(t.substr(eq + 1));
    if (key.empty() || val.empty())
      fail(ErrorCode::InvalidConfig,
           "empty key or value on line " + std::to_string(line_no));
    if (!seen.insert(key).second)
      fail(ErrorCode::InvalidConfig, "duplicate key '" + key + "'");
    if (key == "s") g.s = to_double(key, val);
    else if (key == "d") g.d = to_double(key, val);
    else if (key == "dy") g.d_y = to_double(key, val);
    else if (key == "dz") g.d_z = to_double(key, val);
    else if (key == "ndy") g.n_det_y = (int)to_int(key, val);
    else if (key == "ndz") g.n_det_z = (int)to_int(key, val);
    else if (key == "np") g.n_angles = (int)to_int(key, val);
    else if (key == "angle_start") g.angle_start = to_double(key, val);
    else if (key == "angle_end") g.angle_end = to_double(key, val);
    else if (key == "a") g.a = to_double(key, val);
    else if (key == "b") g.b = to_double(key, val);
    else if (key == "c") g.c = to_double(key, val);
    else if (key == "nx") g.n_x = (int)to_int(key, val);
    else if (key == "ny") g.n_y = (int)to_int(key, val);
    else if (key == "nz") g.n_z = (int)to_int(key, val);
    else if (key == "lambda") cfg.lambda = to_double(key, val);
    else if (key == "max_iter") cfg.max_iter = (int)to_int(key, val);
    else if (key == "tol") cfg.tol = to_double(key, val);
    else if (key == "sigma") cfg.sigma = to_double(key, val);
    else if (key == "seed") cfg.seed = (std::uint64_t)to_int(key, val);
    else fail(ErrorCode::InvalidConfig, "unknown key '" + key + "'");
  }
  for (const char* req : {"s", "d", "dy", "ndy", "np", "a", "b", "nx", "ny"})
    if (!seen.count(req))
      fail(ErrorCode::InvalidConfig, std::string("missing required key '") + req + "'");
  g.validate();
  return cfg;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoFailure, "cannot open config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

std::string config_to_text(const RunConfig& cfg) {
  const ScanGeometry& g = cfg.geom;
  std::ostringstream os;
  os << std::setprecision(17);
  os << "s = " << g.s << "\nd = " << g.d << "\ndy = " << g.d_y
     << "\ndz = " << g.d_z << "\nndy = " << g.n_det_y
     << "\nndz = " << g.n_det_z << "\nnp = " << g.n_angles
     << "\nangle_start = " << g.angle_start << "\nangle_end = " << g.angle_end
     << "\na = " << g.a << "\nb = " << g.b << "\nc = " << g.c
     << "\nnx = " << g.n_x << "\nny = " << g.n_y << "\nnz = " << g.n_z
     << "\nlambda = " << cfg.lambda << "\nmax_iter = " << cfg.max_iter
     << "\ntol = " << cfg.tol << "\nsigma = " << cfg.sigma
     << "\nseed = " << cfg.seed << "\n";
  return os.str();
}

void write_matrix(const std::string& path, const SparseSystemMatrix& w) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorCode::IoFailure, "cannot open " + path + " for writing");
  os.write("CSM1", 4);
  put_u64(os, w.n_rows);
  put_u64(os, w.n_cols);
  put_u64(os, w.nnz());
  put_u64(os, w.meta.size());
  os.write(w.meta.data(), (std::streamsize)w.meta.size());
  os.write(reinterpret_cast<const char*>(w.row_start.data()),
           (std::streamsize)(w.row_start.size() * sizeof(std::uint64_t)));
  // Column indices are u32 in memory but u64 on disk; convert in chunks.
  std::vector<std::uint64_t> buf;
  const std::size_t chunk = 1 << 20;
  for (std::size_t i = 0; i < w.col.size(); i += chunk) {
    const std::size_t n = std::min(chunk, w.col.size() - i);
    buf.resize(n);
    for (std::size_t j = 0; j < n; ++j) buf[j] = w.col[i + j];
    os.write(reinterpret_cast<const char*>(buf.data()),
             (std::streamsize)(n * sizeof(std::uint64_t)));
  }
  os.write(reinterpret_cast<const char*>(w.val.data()),
           (std::streamsize)(w.val.size() * sizeof(double)));
  check_stream(os, path, "write");
}

SparseSystemMatrix read_matrix(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorCode::IoFailure, "cannot open " + path);
  char magic[4] = {};
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "CSM1", 4) != 0)
    fail(ErrorCode::IoFailure, path + " is not a CSM1 matrix file");
  SparseSystemMatrix w;
  w.n_rows = get_u64(is);
  w.n_cols = get_u64(is);
  const std::uint64_t nnz = get_u64(is);
  const std::uint64_t meta_len = get_u64(is);
  check_stream(is, path, "read");
  if (w.n_cols > 0xffffffffull)
    fail(ErrorCode::TooLarge, "matrix has too many columns for this build");
  w.meta.resize(meta_len);
  is.read(w.meta.data(), (std::streamsize)meta_len);
  w.row_start.resize(w.n_rows + 1);
  is.read(reinterpret_cast<char*>(w.row_start.data()),
          (std::streamsize)(w.row_start.size() * sizeof(std::uint64_t)));
  check_stream(is, path, "read");
  if (w.row_start[0] != 0 || w.row_start[w.n_rows] != nnz)
    fail(ErrorCode::IoFailure, path + " has inconsistent row offsets");
  for (std::uint64_t r = 0; r < w.n_rows; ++r)
    if (w.row_start[r + 1] < w.row_start[r])
      fail(ErrorCode::IoFailure, path + " has decreasing row offsets");
  w.col.reserve(nnz);
  std::vector<std::uint64_t> buf;
  const std::uint64_t chunk = 1 << 20;
  for (std::uint64_t i = 0; i < nnz; i += chunk) {
    const std::size_t n = (std::size_t)std::min(chunk, nnz - i);
    buf.resize(n);
    is.read(reinterpret_cast<char*>(buf.data()),
            (std::streamsize)(n * sizeof(std::uint64_t)));
    for (std::size_t j = 0; j < n; ++j) {
      if (buf[j] >= w.n_cols)
        fail(ErrorCode::IoFailure, path + " has a column index out of range");
      w.col.push_back((std::uint32_t)buf[j]);
    }
  }
  w.val.resize(nnz);
  is.read(reinterpret_cast<char*>(w.val.data()),
          (std::streamsize)(nnz * sizeof(double)));
  check_stream(is, path, "read");
  return w;
}

void write_tensor(const std::string& path,
                  const std::vector<std::uint64_t>& dims,
                  const std::vector<double>& data) {
  if (dims.empty() || dims.size() > 8)
    fail(ErrorCode::InvalidSpec, "tensor rank must be between 1 and 8");
  std::uint64_t count = 1;
  for (std::uint64_t d : dims) count *= d;
  if (count != data.size())
    fail(ErrorCode::DimensionMismatch, "tensor dims do not match payload size");
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorCode::IoFailure, "cannot open " + path + " for writing");
  os.write("CTT1", 4);
  put_u32(os, (std::uint32_t)dims.size());
  for (std::uint64_t d : dims) put_u64(os, d);
  os.write(reinterpret_cast<const char*>(data.data()),
           (std::streamsize)(data.size() * sizeof(double)));
  check_stream(os, path, "write");
}

std::vector<double> read_tensor(const std::string& path,
                                std::vector<std::uint64_t>* dims) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorCode::IoFailure, "cannot open " + path);
  char magic[4] = {};
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "CTT1", 4) != 0)
    fail(ErrorCode::IoFailure, path + " is not a CTT1 tensor file");
  const std::uint32_t rank = get_u32(is);
  if (rank == 0 || rank > 8)
    fail(ErrorCode::IoFailure, path + " has an unreasonable tensor rank");
  dims->resize(rank);
  std::uint64_t count = 1;
  for (std::uint32_t i = 0; i < rank; ++i) {
    (*dims)[i] = get_u64(is);
    count *= (*dims)[i];
  }
  check_stream(is, path, "read");
  if (count > (1ull << 33))
    fail(ErrorCode::TooLarge, path + " tensor is too large to load");
  std::vector<double> data(count);
  is.read(reinterpret_cast<char*>(data.data()),
          (std::streamsize)(count * sizeof(double)));
  check_stream(is, path, "read");
  return data;
}

namespace {

void put_be32(std::string* s, std::uint32_t v) {
  s->push_back((char)(v >> 24));
  s->push_back((char)(v >> 16));
  s->push_back((char)(v >> 8));
  s->push_back((char)v);
}

void png_chunk(std::ostream& os, const char type[4], const std::string& data) {
  std::string head;
  put_be32(&head, (std::uint32_t)data.size());
  os.write(head.data(), 4);
  os.write(type, 4);
  os.write(data.data(), (std::streamsize)data.size());
  std::uint32_t crc = crc32(0, nullptr, 0);
  crc = crc32(crc, reinterpret_cast<const Bytef*>(type), 4);
  crc = crc32(crc, reinterpret_cast<const Bytef*>(data.data()),
              (uInt)data.size());
  std::string tail;
  put_be32(&tail, crc);
  os.write(tail.data(), 4);
}

}  // namespace

std::pair<double, double> write_png_gray(const std::string& path, int width,
                                         int height,
                                         const std::vector<double>& values) {
  if (width <= 0 || height <= 0 ||
      values.size() != (std::size_t)width * height)
    fail(ErrorCode::DimensionMismatch, "image dims do not match value count");
  double lo = values[0], hi = values[0];
  for (double v : values) {
    if (!std::isfinite(v)) fail(ErrorCode::NonFinite, "image has non-finite values");
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double scale = hi > lo ? 255.0 / (hi - lo) : 0.0;
  std::vector<unsigned char> raw((std::size_t)height * (width + 1));
  for (int r = 0; r < height; ++r) {
    raw[(std::size_t)r * (width + 1)] = 0;  // filter: none
    for (int c = 0; c < width; ++c) {
      const double v = (values[(std::size_t)r * width + c] - lo) * scale;
      raw[(std::size_t)r * (width + 1) + 1 + c] =
          (unsigned char)std::lround(std::min(255.0, std::max(0.0, v)));
    }
  }
  uLongf zlen = compressBound((uLong)raw.size());
  std::vector<unsigned char> z(zlen);
  if (compress2(z.data(), &zlen, raw.data(), (uLong)raw.size(), 9) != Z_OK)
    fail(ErrorCode::IoFailure, "png compression failed");
  z.resize(zlen);

  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorCode::IoFailure, "cannot open " + path + " for writing");
  static const unsigned char sig[8] = {137, 80, 78, 71, 13, 10, 26, 10};
  os.write(reinterpret_cast<const char*>(sig), 8);
  std::string ihdr;
  put_be32(&ihdr, (std::uint32_t)width);
  put_be32(&ihdr, (std::uint32_t)height);
  ihdr.push_back(8);   // bit depth
  ihdr.push_back(0);   // grayscale
  ihdr.push_back(0);   // compression
  ihdr.push_back(0);   // filter
  ihdr.push_back(0);   // no interlace
  png_chunk(os, "IHDR", ihdr);
  png_chunk(os, "IDAT", std::string(z.begin(), z.end()));
  png_chunk(os, "IEND", "");
  check_stream(os, path, "write");
  return {lo, hi};
}

void write_csv(const std::string& path, const std::string& header,
               const std::vector<std::vector<double>>& rows) {
  std::ofstream os(path);
  if (!os) fail(ErrorCode::IoFailure, "cannot open " + path + " for writing");
  os << header << "\n";
  os << std::setprecision(17);
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i)
      os << (i ? "," : "") << row[i];
    os << "\n";
  }
  check_stream(os, path, "write");
}

std::string meta_value(const std::string& meta, const std::string& key) {
  std::istringstream in(meta);
  std::string line;
  while (std::getline(in, line)) {
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) continue;
    if (trim(line.substr(0, eq)) == key) return trim(line.substr(eq + 1));
  }
  return "";
}

}  // namespace ctsm
