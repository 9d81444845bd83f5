#pragma once

// Tensor-product projections built from a single SpectralProjector, applied
// mode-group by mode-group without forming any Kronecker product.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "linalg.hpp"
#include "tensor.hpp"

namespace tensorcomp {

enum class ProjectionPattern {
  /// Q (x) Q (x) Q for k = 3, Q (x) Q for even k >= 4, Q (x) Q (x) I for odd
  /// k >= 5, with Q acting on groups of floor(k/2) indices (one index for k = 3).
  unfolding,
  /// Q (x) I for k = 3, Q acting on the first two indices jointly.
  contraction,
};

/// Number of tensor indices Q acts on for a given pattern and order.
inline int projector_group_size(ProjectionPattern pattern, int k) {
  if (pattern == ProjectionPattern::contraction) return 2;
  return k == 3 ? 1 : k / 2;
}

namespace detail {

// Applies the projector to the index group [start, start + group) of t.
inline void apply_to_group(std::vector<double>& values, int k, int d, int start, int group,
                           const SpectralProjector& q) {
  const auto du = static_cast<std::uint64_t>(d);
  const auto outer = checked_pow(du, start);
  const auto mid = static_cast<Eigen::Index>(checked_pow(du, group));
  const auto inner = static_cast<Eigen::Index>(checked_pow(du, k - start - group));
  const Matrix& basis = q.basis();
  for (std::uint64_t o = 0; o < outer; ++o) {
    Eigen::Map<RowMatrix> block(values.data() + o * static_cast<std::uint64_t>(mid * inner), mid, inner);
    if (q.rank() == 0) {
      block.setZero();
    } else {
      const Matrix coeff = basis.transpose() * block;
      block.noalias() = basis * coeff;
    }
  }
}

}  // namespace detail

/// Applies the orthogonal projection induced by `q` on (R^d)^{(x)k}.
inline Tensor apply_mode_projection(const Tensor& t, const SpectralProjector& q, ProjectionPattern pattern) {
  const int k = t.order();
  const int d = t.dim();
  if (pattern == ProjectionPattern::contraction && k != 3)
    throw std::invalid_argument("apply_mode_projection: contraction pattern requires k = 3");
  if (pattern == ProjectionPattern::unfolding && k < 3)
    throw std::invalid_argument("apply_mode_projection: unfolding pattern requires k >= 3");
  const int group = projector_group_size(pattern, k);
  const auto expected = checked_pow(static_cast<std::uint64_t>(d), group);
  if (static_cast<std::uint64_t>(q.ambient_dim()) != expected)
    throw std::invalid_argument("apply_mode_projection: projector dimension " +
                                std::to_string(q.ambient_dim()) + " does not match d^" +
                                std::to_string(group) + " = " + std::to_string(expected));

  std::vector<double> values(t.values().begin(), t.values().end());
  int factors = 0;
  if (pattern == ProjectionPattern::contraction) {
    factors = 1;
  } else if (k == 3) {
    factors = 3;
  } else {
    factors = 2;  // the trailing index of odd k carries the identity
  }
  for (int f = 0; f < factors; ++f) detail::apply_to_group(values, k, d, f * group, group, q);
  return Tensor(k, d, std::move(values));
}

}  // namespace tensorcomp
