#pragma once

// Text file formats. Indices in files are 1-based; reals are written with 17
// significant digits so every double round-trips exactly.
//
//   dense tensor   line 1 `k d`, then d^k reals in row-major order
//   observations   line 1 `k d n`, then n lines `i1 ... ik value`
//   matrix         line 1 `d1 d2`, then d1*d2 reals in row-major order
//   components     line 1 `r d`, then r rows of d reals

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

#include "linalg.hpp"
#include "tensor.hpp"

namespace tensorcomp {

/// Malformed or inconsistent file contents.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::string format_real(double v) {
  char buf[32];
  const int len = std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf, static_cast<std::size_t>(len));
}

namespace detail {

class TokenReader {
 public:
  explicit TokenReader(std::istream& in, std::string what) : in_(in), what_(std::move(what)) {}

  std::string next() {
    std::string tok;
    if (!(in_ >> tok)) throw FormatError(what_ + ": unexpected end of input");
    return tok;
  }

  template <typename Int>
  Int integer() {
    const auto tok = next();
    Int v{};
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || ptr != tok.data() + tok.size())
      throw FormatError(what_ + ": expected integer, got '" + tok + "'");
    return v;
  }

  double real() {
    const auto tok = next();
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || ptr != tok.data() + tok.size())
      throw FormatError(what_ + ": expected real, got '" + tok + "'");
    return v;
  }

  void expect_end() {
    std::string tok;
    if (in_ >> tok) throw FormatError(what_ + ": trailing content '" + tok + "'");
  }

 private:
  std::istream& in_;
  std::string what_;
};

inline std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
  return in;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  return out;
}

inline void check_shape(int k, int d, const std::string& what) {
  if (k < 1 || d < 1) throw FormatError(what + ": k and d must be positive");
}

}  // namespace detail

inline void write_tensor(std::ostream& os, const Tensor& t) {
  os << t.order() << ' ' << t.dim() << '\n';
  const auto row = static_cast<std::uint64_t>(t.dim());
  for (std::uint64_t i = 0; i < t.size(); ++i) {
    os << format_real(t[i]);
    os << ((i + 1) % row == 0 ? '\n' : ' ');
  }
}

inline Tensor read_tensor(std::istream& is) {
  detail::TokenReader r(is, "tensor file");
  const int k = r.integer<int>();
  const int d = r.integer<int>();
  detail::check_shape(k, d, "tensor file");
  std::vector<double> v(checked_pow(static_cast<std::uint64_t>(d), k));
  for (double& x : v) x = r.real();
  r.expect_end();
  return Tensor(k, d, std::move(v));
}

inline void write_observations(std::ostream& os, const PartialTensor& y) {
  const auto& mask = y.mask();
  os << mask.order() << ' ' << mask.dim() << ' ' << mask.size() << '\n';
  std::vector<int> idx(static_cast<std::size_t>(mask.order()));
  for (std::uint64_t lin : mask.entries()) {
    multi_index(lin, mask.dim(), idx);
    for (int u : idx) os << (u + 1) << ' ';
    os << format_real(y.tensor()[lin]) << '\n';
  }
}

inline PartialTensor read_observations(std::istream& is) {
  detail::TokenReader r(is, "observation file");
  const int k = r.integer<int>();
  const int d = r.integer<int>();
  detail::check_shape(k, d, "observation file");
  const auto n = r.integer<std::uint64_t>();
  const auto capacity = checked_pow(static_cast<std::uint64_t>(d), k);
  if (n > capacity) throw FormatError("observation file: n exceeds d^k");
  std::vector<std::pair<std::uint64_t, double>> obs;
  obs.reserve(static_cast<std::size_t>(n));
  std::vector<int> idx(static_cast<std::size_t>(k));
  for (std::uint64_t e = 0; e < n; ++e) {
    for (int m = 0; m < k; ++m) {
      const int u = r.integer<int>();
      if (u < 1 || u > d) throw FormatError("observation file: index " + std::to_string(u) + " outside [1, d]");
      idx[static_cast<std::size_t>(m)] = u - 1;
    }
    obs.emplace_back(linear_index(idx, d), r.real());
  }
  r.expect_end();
  std::sort(obs.begin(), obs.end());
  std::vector<std::uint64_t> lin;
  std::vector<double> vals;
  for (const auto& [l, v] : obs) {
    if (!lin.empty() && lin.back() == l) throw FormatError("observation file: duplicate index");
    lin.push_back(l);
    vals.push_back(v);
  }
  return PartialTensor(ObservationMask(k, d, std::move(lin)), vals);
}

template <typename Derived>
void write_matrix(std::ostream& os, const Eigen::MatrixBase<Derived>& m) {
  os << m.rows() << ' ' << m.cols() << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) os << ' ';
      os << format_real(m(i, j));
    }
    os << '\n';
  }
}

inline Matrix read_matrix(std::istream& is, const std::string& what = "matrix file") {
  detail::TokenReader r(is, what);
  const auto rows = r.integer<Eigen::Index>();
  const auto cols = r.integer<Eigen::Index>();
  if (rows < 0 || cols < 0) throw FormatError(what + ": negative dimension");
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = r.real();
  r.expect_end();
  return m;
}

/// Component vectors as rows (r x d); same layout as the matrix format.
inline void write_components(std::ostream& os, const Matrix& components) { write_matrix(os, components); }
inline Matrix read_components(std::istream& is) { return read_matrix(is, "components file"); }

inline void save_tensor(const std::string& path, const Tensor& t) {
  auto out = detail::open_out(path);
  write_tensor(out, t);
}
inline Tensor load_tensor(const std::string& path) {
  auto in = detail::open_in(path);
  return read_tensor(in);
}
inline void save_observations(const std::string& path, const PartialTensor& y) {
  auto out = detail::open_out(path);
  write_observations(out, y);
}
inline PartialTensor load_observations(const std::string& path) {
  auto in = detail::open_in(path);
  return read_observations(in);
}
inline void save_matrix(const std::string& path, const Matrix& m) {
  auto out = detail::open_out(path);
  write_matrix(out, m);
}
inline Matrix load_matrix(const std::string& path) {
  auto in = detail::open_in(path);
  return read_matrix(in);
}

}  // namespace tensorcomp
