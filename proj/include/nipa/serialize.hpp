// Binary file helpers for checkpoints and sample matrices. Little-endian,
// fixed-width fields; doubles round-trip bit-exactly.
#pragma once

#include "nipa/common.hpp"
#include "nipa/net.hpp"
#include "nipa/pool.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

namespace nipa::io {

inline void write_bytes(std::ostream& os, const void* data, std::size_t n) {
  os.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
  if (!os) throw std::runtime_error("write failed");
}

inline void read_bytes(std::istream& is, void* data, std::size_t n) {
  is.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
  if (is.gcount() != static_cast<std::streamsize>(n))
    throw std::runtime_error("read failed: truncated file");
}

inline void write_u64(std::ostream& os, std::uint64_t v) { write_bytes(os, &v, sizeof v); }
inline std::uint64_t read_u64(std::istream& is) {
  std::uint64_t v;
  read_bytes(is, &v, sizeof v);
  return v;
}

inline void write_i64(std::ostream& os, std::int64_t v) { write_bytes(os, &v, sizeof v); }
inline std::int64_t read_i64(std::istream& is) {
  std::int64_t v;
  read_bytes(is, &v, sizeof v);
  return v;
}

inline void write_f64(std::ostream& os, double v) { write_bytes(os, &v, sizeof v); }
inline double read_f64(std::istream& is) {
  double v;
  read_bytes(is, &v, sizeof v);
  return v;
}

inline void write_vector(std::ostream& os, const Vector& v) {
  write_i64(os, v.size());
  write_bytes(os, v.data(), sizeof(double) * static_cast<std::size_t>(v.size()));
}

inline Vector read_vector(std::istream& is) {
  const auto n = read_i64(is);
  if (n < 0) throw std::runtime_error("read_vector: negative length");
  Vector v(n);
  read_bytes(is, v.data(), sizeof(double) * static_cast<std::size_t>(n));
  return v;
}

inline void write_matrix(std::ostream& os, const Matrix& m) {
  write_i64(os, m.rows());
  write_i64(os, m.cols());
  MatrixRM rm = m;  // row-major on disk
  write_bytes(os, rm.data(), sizeof(double) * static_cast<std::size_t>(rm.size()));
}

inline Matrix read_matrix(std::istream& is) {
  const auto rows = read_i64(is);
  const auto cols = read_i64(is);
  if (rows < 0 || cols < 0) throw std::runtime_error("read_matrix: negative shape");
  MatrixRM rm(rows, cols);
  read_bytes(is, rm.data(), sizeof(double) * static_cast<std::size_t>(rm.size()));
  return rm;
}

inline void write_string(std::ostream& os, const std::string& s) {
  write_u64(os, s.size());
  write_bytes(os, s.data(), s.size());
}

inline std::string read_string(std::istream& is) {
  const auto n = read_u64(is);
  std::string s(n, '\0');
  if (n > 0) read_bytes(is, s.data(), n);
  return s;
}

inline void write_magic(std::ostream& os, const char magic[8], std::uint64_t version) {
  write_bytes(os, magic, 8);
  write_u64(os, version);
}

inline void expect_magic(std::istream& is, const char magic[8], std::uint64_t version,
                         const char* what) {
  char got[8];
  read_bytes(is, got, 8);
  if (std::memcmp(got, magic, 8) != 0)
    throw std::runtime_error(std::string(what) + ": bad magic");
  const auto v = read_u64(is);
  if (v != version)
    throw std::runtime_error(std::string(what) + ": unsupported version " + std::to_string(v));
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  return os;
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open for reading: " + path);
  return is;
}

inline void write_net_spec(std::ostream& os, const NetSpec& spec) {
  write_u64(os, spec.widths.size());
  for (int w : spec.widths) write_i64(os, w);
  write_u64(os, spec.activations.size());
  for (auto a : spec.activations) write_u64(os, static_cast<std::uint64_t>(a));
}

inline NetSpec read_net_spec(std::istream& is) {
  NetSpec spec;
  const auto nw = read_u64(is);
  spec.widths.resize(nw);
  for (auto& w : spec.widths) w = static_cast<int>(read_i64(is));
  const auto na = read_u64(is);
  spec.activations.resize(na);
  for (auto& a : spec.activations) a = static_cast<Activation>(read_u64(is));
  spec.validate();
  return spec;
}

// --- sample matrix ---------------------------------------------------------

inline constexpr char kSamplesMagic[8] = {'N', 'I', 'P', 'S', 'M', 'P', 'L', '1'};

inline void save_samples(const std::string& path, const Matrix& samples) {
  auto os = open_out(path);
  write_magic(os, kSamplesMagic, 1);
  write_matrix(os, samples);
}

inline Matrix load_samples(const std::string& path) {
  auto is = open_in(path);
  expect_magic(is, kSamplesMagic, 1, "samples file");
  return read_matrix(is);
}

// --- pool checkpoint --------------------------------------------------------

inline constexpr char kPoolMagic[8] = {'N', 'I', 'P', 'P', 'O', 'O', 'L', '1'};

inline void save_pool(const std::string& path, const MemoryPool& pool) {
  auto os = open_out(path);
  write_magic(os, kPoolMagic, 1);
  write_i64(os, pool.dim());
  write_f64(os, pool.s_floor());
  write_i64(os, pool.size());
  Matrix thetas(pool.size(), pool.dim());
  for (Index i = 0; i < pool.size(); ++i) thetas.row(i) = pool.entry(i).theta.transpose();
  write_matrix(os, thetas);
  for (Index i = 0; i < pool.size(); ++i) write_f64(os, pool.entry(i).log_density);
  for (Index i = 0; i < pool.size(); ++i)
    write_u64(os, static_cast<std::uint64_t>(pool.entry(i).origin));
  write_vector(os, pool.mean());
  write_vector(os, pool.stddev());
}

inline MemoryPool load_pool(const std::string& path) {
  auto is = open_in(path);
  expect_magic(is, kPoolMagic, 1, "pool file");
  const Index dim = read_i64(is);
  const double s_floor = read_f64(is);
  const Index n = read_i64(is);
  MemoryPool pool(dim, s_floor);
  const Matrix thetas = read_matrix(is);
  if (thetas.rows() != n || thetas.cols() != dim)
    throw std::runtime_error("pool file: theta matrix shape mismatch");
  std::vector<double> logdens(static_cast<std::size_t>(n));
  for (auto& l : logdens) l = read_f64(is);
  std::vector<Origin> origins(static_cast<std::size_t>(n));
  for (auto& o : origins) o = static_cast<Origin>(read_u64(is));
  for (Index i = 0; i < n; ++i)
    pool.insert(thetas.row(i).transpose(), logdens[static_cast<std::size_t>(i)],
                origins[static_cast<std::size_t>(i)]);
  // Stored stats are authoritative for the roundtrip check; the incremental
  // rebuild above must reproduce them.
  const Vector mean = read_vector(is);
  const Vector stddev = read_vector(is);
  if ((mean - pool.mean()).cwiseAbs().maxCoeff() > 1e-9 ||
      (stddev - pool.stddev()).cwiseAbs().maxCoeff() > 1e-9)
    throw std::runtime_error("pool file: standardization stats do not match entries");
  return pool;
}

}  // namespace nipa::io
