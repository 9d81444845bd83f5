#pragma once

// Dense cubic tensors, observation masks, unfoldings and rank utilities.
//
// Storage is row-major with the last index varying fastest, so the linear
// offset of (u_1, ..., u_k) is sum_m u_m d^(k-m). Indices are 0-based in
// memory; file formats use 1-based indices (see io.hpp).

#include <algorithm>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "linalg.hpp"

namespace tensorcomp {

/// d^k with overflow detection.
inline std::uint64_t checked_pow(std::uint64_t base, int exp) {
  std::uint64_t out = 1;
  for (int i = 0; i < exp; ++i) {
    if (base != 0 && out > std::numeric_limits<std::uint64_t>::max() / base)
      throw std::overflow_error("checked_pow: d^k overflows 64 bits");
    out *= base;
  }
  return out;
}

inline std::uint64_t linear_index(std::span<const int> idx, int dim) {
  std::uint64_t lin = 0;
  for (int u : idx) lin = lin * static_cast<std::uint64_t>(dim) + static_cast<std::uint64_t>(u);
  return lin;
}

inline void multi_index(std::uint64_t lin, int dim, std::span<int> out) {
  for (std::size_t m = out.size(); m-- > 0;) {
    out[m] = static_cast<int>(lin % static_cast<std::uint64_t>(dim));
    lin /= static_cast<std::uint64_t>(dim);
  }
}

inline std::vector<int> multi_index(std::uint64_t lin, int order, int dim) {
  std::vector<int> out(static_cast<std::size_t>(order));
  multi_index(lin, dim, out);
  return out;
}

class Tensor {
 public:
  Tensor() = default;

  /// Zero tensor in (R^dim)^{order}.
  Tensor(int order, int dim) : order_(order), dim_(dim) {
    validate_shape();
    values_.assign(checked_pow(static_cast<std::uint64_t>(dim), order), 0.0);
  }

  Tensor(int order, int dim, std::vector<double> values, bool symmetric = false)
      : order_(order), dim_(dim), values_(std::move(values)), symmetric_(symmetric) {
    validate_shape();
    const auto expected = checked_pow(static_cast<std::uint64_t>(dim), order);
    if (values_.size() != expected)
      throw std::invalid_argument("Tensor: expected " + std::to_string(expected) +
                                  " values, got " + std::to_string(values_.size()));
  }

  int order() const { return order_; }
  int dim() const { return dim_; }
  std::uint64_t size() const { return values_.size(); }
  bool symmetric() const { return symmetric_; }

  std::span<const double> values() const { return values_; }
  const double* data() const { return values_.data(); }

  /// Mutable access drops the symmetric flag; callers re-establish it with
  /// symmetrize() or mark_symmetric().
  std::span<double> mutable_values() {
    symmetric_ = false;
    return values_;
  }

  double operator[](std::uint64_t lin) const { return values_[lin]; }

  double at(std::span<const int> idx) const {
    check_index(idx);
    return values_[linear_index(idx, dim_)];
  }
  double at(std::initializer_list<int> idx) const {
    return at(std::span<const int>(idx.begin(), idx.size()));
  }

  void set(std::span<const int> idx, double v) {
    check_index(idx);
    symmetric_ = false;
    values_[linear_index(idx, dim_)] = v;
  }
  void set(std::initializer_list<int> idx, double v) {
    set(std::span<const int>(idx.begin(), idx.size()), v);
  }

  bool same_shape(const Tensor& other) const {
    return order_ == other.order_ && dim_ == other.dim_;
  }

  Eigen::Map<const Vector> as_vector() const {
    return {values_.data(), static_cast<Eigen::Index>(values_.size())};
  }

  /// Sets the symmetric flag after verifying it to `tol` (absolute).
  void mark_symmetric(double tol = 0.0);

  Tensor& operator+=(const Tensor& other) {
    require_same_shape(other, "operator+=");
    const bool sym = symmetric_ && other.symmetric_;
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
    symmetric_ = sym;
    return *this;
  }
  Tensor& operator-=(const Tensor& other) {
    require_same_shape(other, "operator-=");
    const bool sym = symmetric_ && other.symmetric_;
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
    symmetric_ = sym;
    return *this;
  }
  Tensor& operator*=(double c) {
    for (double& v : values_) v *= c;
    return *this;
  }

  friend Tensor operator+(Tensor a, const Tensor& b) { return a += b; }
  friend Tensor operator-(Tensor a, const Tensor& b) { return a -= b; }
  friend Tensor operator*(double c, Tensor a) { return a *= c; }
  friend Tensor operator*(Tensor a, double c) { return a *= c; }

 private:
  void validate_shape() const {
    if (order_ < 1 || dim_ < 1)
      throw std::invalid_argument("Tensor: order and dimension must be positive");
  }
  void check_index(std::span<const int> idx) const {
    if (static_cast<int>(idx.size()) != order_)
      throw std::invalid_argument("Tensor: index has wrong arity");
    for (int u : idx)
      if (u < 0 || u >= dim_) throw std::out_of_range("Tensor: index out of range");
  }
  void require_same_shape(const Tensor& other, const char* what) const {
    if (!same_shape(other)) throw std::invalid_argument(std::string("Tensor::") + what + ": shape mismatch");
  }

  int order_ = 0;
  int dim_ = 0;
  std::vector<double> values_;
  bool symmetric_ = false;
};

namespace detail {

// Calls fn(sorted_linear, lin) for every linear index, where sorted_linear is
// the offset of the non-decreasing rearrangement of the multi-index. The
// sorted rearrangement is lexicographically smallest, so it is visited first.
template <typename Fn>
void for_each_with_sorted(int order, int dim, std::uint64_t size, Fn&& fn) {
  std::vector<int> idx(static_cast<std::size_t>(order), 0);
  std::vector<int> sorted(idx.size());
  for (std::uint64_t lin = 0; lin < size; ++lin) {
    multi_index(lin, dim, idx);
    sorted = idx;
    std::sort(sorted.begin(), sorted.end());
    fn(linear_index(sorted, dim), lin, std::span<const int>(sorted));
  }
}

}  // namespace detail

inline void Tensor::mark_symmetric(double tol) {
  bool ok = true;
  detail::for_each_with_sorted(order_, dim_, size(), [&](std::uint64_t s, std::uint64_t lin, auto) {
    if (std::abs(values_[s] - values_[lin]) > tol) ok = false;
  });
  if (!ok) throw std::invalid_argument("Tensor::mark_symmetric: tensor is not symmetric");
  symmetric_ = true;
}

/// Average of T over all permutations of its indices, computed once per
/// sorted index class and broadcast, so the result is exactly symmetric.
inline Tensor symmetrize(const Tensor& t) {
  const int k = t.order();
  const int d = t.dim();
  std::vector<double> out(t.size());
  std::vector<int> perm(static_cast<std::size_t>(k));
  detail::for_each_with_sorted(k, d, t.size(), [&](std::uint64_t s, std::uint64_t lin, std::span<const int> sorted) {
    if (s == lin) {
      // Distinct rearrangements of a multiset all occur equally often among
      // the k! permutations, so averaging over distinct ones is equivalent.
      std::copy(sorted.begin(), sorted.end(), perm.begin());
      double sum = 0.0;
      std::uint64_t count = 0;
      do {
        sum += t[linear_index(perm, d)];
        ++count;
      } while (std::next_permutation(perm.begin(), perm.end()));
      out[lin] = sum / static_cast<double>(count);
    } else {
      out[lin] = out[s];
    }
  });
  return Tensor(k, d, std::move(out), true);
}

/// Largest deviation between T and any index permutation of T.
inline double symmetry_defect(const Tensor& t) {
  double worst = 0.0;
  const int k = t.order();
  const int d = t.dim();
  std::vector<int> idx(static_cast<std::size_t>(k));
  for (std::uint64_t lin = 0; lin < t.size(); ++lin) {
    multi_index(lin, d, idx);
    std::sort(idx.begin(), idx.end());
    if (linear_index(idx, d) != lin) continue;
    const double ref = t[lin];
    do {
      worst = std::max(worst, std::abs(t[linear_index(idx, d)] - ref));
    } while (std::next_permutation(idx.begin(), idx.end()));
  }
  return worst;
}

inline double frobenius(const Tensor& t) { return t.as_vector().norm(); }
inline double max_abs(const Tensor& t) {
  return t.size() == 0 ? 0.0 : t.as_vector().cwiseAbs().maxCoeff();
}

/// A set E of observed positions in [d]^k, stored as sorted unique linear
/// offsets (equivalently, index tuples in lexicographic order).
class ObservationMask {
 public:
  ObservationMask() = default;

  ObservationMask(int order, int dim, std::vector<std::uint64_t> entries)
      : order_(order), dim_(dim), entries_(std::move(entries)) {
    if (order < 1 || dim < 1)
      throw std::invalid_argument("ObservationMask: order and dimension must be positive");
    capacity_ = checked_pow(static_cast<std::uint64_t>(dim), order);
    std::sort(entries_.begin(), entries_.end());
    if (std::adjacent_find(entries_.begin(), entries_.end()) != entries_.end())
      throw std::invalid_argument("ObservationMask: duplicate entries");
    if (!entries_.empty() && entries_.back() >= capacity_)
      throw std::out_of_range("ObservationMask: entry outside [d]^k");
  }

  static ObservationMask from_tuples(int order, int dim, const std::vector<std::vector<int>>& tuples) {
    std::vector<std::uint64_t> lin;
    lin.reserve(tuples.size());
    for (const auto& t : tuples) {
      if (static_cast<int>(t.size()) != order)
        throw std::invalid_argument("ObservationMask: tuple has wrong arity");
      for (int u : t)
        if (u < 0 || u >= dim) throw std::out_of_range("ObservationMask: index out of range");
      lin.push_back(linear_index(t, dim));
    }
    return ObservationMask(order, dim, std::move(lin));
  }

  static ObservationMask full(int order, int dim) {
    std::vector<std::uint64_t> lin(checked_pow(static_cast<std::uint64_t>(dim), order));
    for (std::uint64_t i = 0; i < lin.size(); ++i) lin[i] = i;
    return ObservationMask(order, dim, std::move(lin));
  }

  int order() const { return order_; }
  int dim() const { return dim_; }
  std::uint64_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  /// d^k, the number of positions in [d]^k.
  std::uint64_t capacity() const { return capacity_; }
  std::span<const std::uint64_t> entries() const { return entries_; }

  bool contains(std::uint64_t lin) const {
    return std::binary_search(entries_.begin(), entries_.end(), lin);
  }
  std::vector<int> tuple(std::size_t i) const { return multi_index(entries_.at(i), order_, dim_); }

  bool is_subset_of(const ObservationMask& other) const {
    return order_ == other.order_ && dim_ == other.dim_ &&
           std::includes(other.entries_.begin(), other.entries_.end(), entries_.begin(), entries_.end());
  }

  friend bool operator==(const ObservationMask&, const ObservationMask&) = default;

 private:
  int order_ = 0;
  int dim_ = 0;
  std::uint64_t capacity_ = 0;
  std::vector<std::uint64_t> entries_;
};

/// Pi_E applied to a tensor: a dense array that is zero off the mask.
class PartialTensor {
 public:
  PartialTensor() = default;

  /// Builds Pi_E from values listed in mask order.
  PartialTensor(ObservationMask mask, std::span<const double> observed)
      : tensor_(mask.order(), mask.dim()), mask_(std::move(mask)) {
    if (observed.size() != mask_.size())
      throw std::invalid_argument("PartialTensor: value count does not match mask size");
    auto out = tensor_.mutable_values();
    std::size_t i = 0;
    for (std::uint64_t lin : mask_.entries()) out[lin] = observed[i++];
  }

  const Tensor& tensor() const { return tensor_; }
  const ObservationMask& mask() const { return mask_; }
  int order() const { return mask_.order(); }
  int dim() const { return mask_.dim(); }
  std::uint64_t n() const { return mask_.size(); }

  /// Values on the mask, in mask order.
  std::vector<double> observed_values() const {
    std::vector<double> out;
    out.reserve(mask_.size());
    for (std::uint64_t lin : mask_.entries()) out.push_back(tensor_[lin]);
    return out;
  }

 private:
  Tensor tensor_;
  ObservationMask mask_;
};

inline PartialTensor project_mask(const Tensor& t, const ObservationMask& mask) {
  if (t.order() != mask.order() || t.dim() != mask.dim())
    throw std::invalid_argument("project_mask: tensor and mask shapes differ");
  std::vector<double> observed;
  observed.reserve(mask.size());
  for (std::uint64_t lin : mask.entries()) observed.push_back(t[lin]);
  return PartialTensor(mask, observed);
}

inline PartialTensor project_mask(const PartialTensor& y, const ObservationMask& mask) {
  return project_mask(y.tensor(), mask);
}

/// Matricization of an order-(a+b) tensor into d^a x d^b. Row index
/// enumerates the first a tensor indices, column index the last b.
struct UnfoldedMatrix {
  int a = 0;
  int b = 0;
  int d = 0;
  RowMatrix values;
};

inline UnfoldedMatrix unfold(const Tensor& t, int a, int b) {
  if (a < 1 || b < 1 || a + b != t.order())
    throw std::invalid_argument("unfold: need a, b >= 1 and a + b = k (k=" + std::to_string(t.order()) + ")");
  const auto d = static_cast<std::uint64_t>(t.dim());
  const auto rows = static_cast<Eigen::Index>(checked_pow(d, a));
  const auto cols = static_cast<Eigen::Index>(checked_pow(d, b));
  // Row-major flattening makes the unfolding a reinterpretation of storage.
  return {a, b, t.dim(), Eigen::Map<const RowMatrix>(t.data(), rows, cols)};
}

inline Tensor refold(const UnfoldedMatrix& x) {
  if (x.a < 1 || x.b < 1 || x.d < 1)
    throw std::invalid_argument("refold: invalid (a, b, d)");
  const auto d = static_cast<std::uint64_t>(x.d);
  if (static_cast<std::uint64_t>(x.values.rows()) != checked_pow(d, x.a) ||
      static_cast<std::uint64_t>(x.values.cols()) != checked_pow(d, x.b))
    throw std::invalid_argument("refold: matrix shape does not match (a, b, d)");
  std::vector<double> v(x.values.data(), x.values.data() + x.values.size());
  return Tensor(x.a + x.b, x.d, std::move(v));
}

/// Mode-m unfolding: d x d^(k-1), row = index m, columns enumerate the
/// remaining indices in their original order.
inline Matrix mode_unfold(const Tensor& t, int mode) {
  const int k = t.order();
  if (mode < 0 || mode >= k) throw std::invalid_argument("mode_unfold: mode out of range");
  const auto d = static_cast<std::uint64_t>(t.dim());
  const auto before = checked_pow(d, mode);
  const auto after = checked_pow(d, k - mode - 1);
  Matrix out(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(before * after));
  for (std::uint64_t p = 0; p < before; ++p)
    for (std::uint64_t i = 0; i < d; ++i)
      for (std::uint64_t q = 0; q < after; ++q)
        out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(p * after + q)) =
            t[(p * d + i) * after + q];
  return out;
}

struct MultilinearRank {
  std::vector<int> ranks;  // rank of each mode-m unfolding
  int max = 0;
  bool zero_tensor = false;
};

inline MultilinearRank multilinear_rank(const Tensor& t, double tol = kDefaultRankTolerance) {
  MultilinearRank out;
  out.ranks.assign(static_cast<std::size_t>(t.order()), 0);
  if (max_abs(t) == 0.0) {
    out.zero_tensor = true;
    return out;
  }
  for (int m = 0; m < t.order(); ++m) {
    out.ranks[static_cast<std::size_t>(m)] = numerical_rank(mode_unfold(t, m), tol);
    out.max = std::max(out.max, out.ranks[static_cast<std::size_t>(m)]);
  }
  return out;
}

}  // namespace tensorcomp
