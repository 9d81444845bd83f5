#pragma once

// Completion of (possibly overcomplete) symmetric third-order tensors by
// contracting two independent observed copies over a shared mode:
//   1. split E into I, J, K with marginal rate delta, 1 - (1 - delta)^3 = |E| / d^3;
//   2. W[(i1,i2),(j1,j2)] = delta^-2 sum_l Y_I[l,i1,j1] Y_J[l,i2,j2];
//   3. Q = projector onto singular vectors of W with singular value >= lambda_star;
//   4. return (Q (x) I)(Y_K / delta).

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "completion.hpp"
#include "linalg.hpp"
#include "mode_projection.hpp"
#include "random.hpp"
#include "tensor.hpp"
#include "unfold_completion.hpp"

namespace tensorcomp {

/// delta = 1 - (1 - |E| / d^3)^{1/3}.
inline double delta_from_mask(std::uint64_t observed, int d) {
  const double capacity = std::pow(static_cast<double>(d), 3);
  if (observed == 0 || static_cast<double>(observed) > capacity)
    throw std::invalid_argument("delta_from_mask: need 0 < |E| <= d^3");
  const double fraction = static_cast<double>(observed) / capacity;
  if (fraction >= 1.0) return 1.0;
  return -std::expm1(std::log1p(-fraction) / 3.0);
}

inline double delta_from_mask(const ObservationMask& e) {
  if (e.order() != 3) throw std::invalid_argument("delta_from_mask: mask must have order 3");
  return delta_from_mask(e.size(), e.dim());
}

struct TripleSplit {
  ObservationMask i;
  ObservationMask j;
  ObservationMask k;
  double delta = 0.0;
  SplitMode mode = SplitMode::exact;
  /// Entries per membership cell, ordered I, J, K, IJ, IK, JK, IJK.
  std::array<std::uint64_t, 7> cells{};
  /// Largest |cell - exact target| (exact mode only).
  double rounding_slack = 0.0;
};

namespace detail {

// Membership bits per cell in TripleSplit::cells order.
inline constexpr std::array<unsigned, 7> kCellBits = {0b001, 0b010, 0b100, 0b011, 0b101, 0b110, 0b111};

// Largest-remainder rounding of the seven cell targets to integers summing to n.
inline std::array<std::uint64_t, 7> round_cells(const std::array<double, 7>& target, std::uint64_t n) {
  std::array<std::uint64_t, 7> out{};
  std::array<double, 7> frac{};
  std::uint64_t assigned = 0;
  for (std::size_t c = 0; c < 7; ++c) {
    const double t = std::max(0.0, target[c]);
    out[c] = static_cast<std::uint64_t>(std::floor(t));
    frac[c] = t - std::floor(t);
    assigned += out[c];
  }
  // Floating error can push the floor sum above n; trim from the largest cells.
  while (assigned > n) {
    std::size_t big = 0;
    for (std::size_t c = 1; c < 7; ++c)
      if (out[c] > out[big]) big = c;
    --out[big];
    --assigned;
  }
  std::array<std::size_t, 7> order{0, 1, 2, 3, 4, 5, 6};
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
  for (std::size_t pos = 0; assigned < n; pos = (pos + 1) % 7) {
    ++out[order[pos]];
    ++assigned;
  }
  return out;
}

}  // namespace detail

/// Splits E into I, J, K. Exact mode realizes the sizes |I| = d^3 delta,
/// pairwise intersections d^3 delta^2 and triple intersection d^3 delta^3 up
/// to rounding; Bernoulli mode draws i.i.d. Ber(delta) memberships per entry
/// conditioned on at least one success.
inline TripleSplit split_three(const ObservationMask& e, double delta, SplitMode mode, std::uint64_t seed) {
  if (e.order() != 3) throw std::invalid_argument("split_three: mask must have order 3");
  if (e.empty()) throw std::invalid_argument("split_three: empty mask");
  if (!(delta > 0.0 && delta <= 1.0)) throw std::invalid_argument("split_three: delta must lie in (0, 1]");
  Rng rng(seed);
  TripleSplit out;
  out.delta = delta;
  out.mode = mode;
  std::vector<unsigned> membership(e.size(), 0);

  if (mode == SplitMode::exact) {
    const double cap = static_cast<double>(e.capacity());
    const double s1 = cap * delta;
    const double s2 = cap * delta * delta;
    const double s3 = cap * delta * delta * delta;
    const double single = s1 - 2.0 * s2 + s3;
    const double pair = s2 - s3;
    const std::array<double, 7> target = {single, single, single, pair, pair, pair, s3};
    const double total = 3.0 * single + 3.0 * pair + s3;
    if (std::abs(total - static_cast<double>(e.size())) > 7.0)
      throw std::invalid_argument("split_three: delta inconsistent with |E| (cells sum to " +
                                  std::to_string(total) + ", |E| = " + std::to_string(e.size()) + ")");
    out.cells = detail::round_cells(target, e.size());
    for (std::size_t c = 0; c < 7; ++c)
      out.rounding_slack = std::max(out.rounding_slack, std::abs(static_cast<double>(out.cells[c]) - target[c]));
    std::vector<std::size_t> perm(e.size());
    for (std::size_t p = 0; p < perm.size(); ++p) perm[p] = p;
    rng.shuffle(perm);
    std::size_t pos = 0;
    for (std::size_t c = 0; c < 7; ++c)
      for (std::uint64_t m = 0; m < out.cells[c]; ++m) membership[perm[pos++]] = detail::kCellBits[c];
  } else {
    for (auto& bits : membership) {
      do {
        bits = (rng.bernoulli(delta) ? 1u : 0u) | (rng.bernoulli(delta) ? 2u : 0u) | (rng.bernoulli(delta) ? 4u : 0u);
      } while (bits == 0);
      for (std::size_t c = 0; c < 7; ++c)
        if (detail::kCellBits[c] == bits) ++out.cells[c];
    }
  }

  std::vector<std::uint64_t> si, sj, sk;
  for (std::size_t p = 0; p < membership.size(); ++p) {
    const std::uint64_t lin = e.entries()[p];
    if (membership[p] & 1u) si.push_back(lin);
    if (membership[p] & 2u) sj.push_back(lin);
    if (membership[p] & 4u) sk.push_back(lin);
  }
  out.i = ObservationMask(3, e.dim(), std::move(si));
  out.j = ObservationMask(3, e.dim(), std::move(sj));
  out.k = ObservationMask(3, e.dim(), std::move(sk));
  return out;
}

/// W[(i1,i2),(j1,j2)] = delta^-2 sum_l A[l,i1,j1] C[l,i2,j2], rows and
/// columns paired row-major as in unfold.
inline Matrix contract(const Tensor& a, const Tensor& c, double delta) {
  if (a.order() != 3 || !a.same_shape(c)) throw std::invalid_argument("contract: need two order-3 tensors of equal dimension");
  if (!(delta > 0.0 && delta <= 1.0)) throw std::invalid_argument("contract: delta must lie in (0, 1]");
  const Eigen::Index d = a.dim();
  const Eigen::Index d2 = d * d;
  // Slices over the shared first index: rows l, columns (i, j).
  const Eigen::Map<const RowMatrix> sa(a.data(), d, d2);
  const Eigen::Map<const RowMatrix> sc(c.data(), d, d2);
  // M[(i1,j1),(i2,j2)] = sum_l A[l,i1,j1] C[l,i2,j2]; one GEMM with a fixed
  // summation order, then an index permutation into W.
  const Matrix m = sa.transpose() * sc;
  const double scale = 1.0 / (delta * delta);
  Matrix w(d2, d2);
  for (Eigen::Index i1 = 0; i1 < d; ++i1)
    for (Eigen::Index j1 = 0; j1 < d; ++j1)
      for (Eigen::Index i2 = 0; i2 < d; ++i2)
        for (Eigen::Index j2 = 0; j2 < d; ++j2)
          w(i1 * d + i2, j1 * d + j2) = scale * m(i1 * d + j1, i2 * d + j2);
  return w;
}

/// lambda* = (d^{3/2} max{d, r} / n)^{4/5}.
inline double lambda_star_theorem2(double n, int d, int r) {
  if (!(n > 0.0) || d < 1 || r < 1) throw std::invalid_argument("lambda_star_theorem2: inputs must be positive");
  const double dd = d;
  return std::pow(std::pow(dd, 1.5) * std::max(dd, static_cast<double>(r)) / n, 0.8);
}

enum class ContractionSide {
  left_singular,  // left singular vectors of W
  symmetrized,    // eigenvectors of (W + W^T) / 2
};

struct ContractionConfig {
  LambdaMode lambda_mode = LambdaMode::theorem;  // simulation is not defined here
  double lambda_value = 0.0;
  /// Generative rank, required by the theorem threshold.
  std::optional<int> rank;
  SplitMode split = SplitMode::bernoulli;
  ContractionSide side = ContractionSide::left_singular;
  std::uint64_t seed = 0;
};

inline CompletionResult complete_contraction(const PartialTensor& y, const ContractionConfig& cfg) {
  detail::Stopwatch clock;
  if (y.order() != 3) throw std::invalid_argument("complete_contraction: order must be 3");
  if (y.n() == 0) throw std::invalid_argument("complete_contraction: empty mask");
  if (cfg.lambda_mode == LambdaMode::simulation)
    throw std::invalid_argument("complete_contraction: simulation threshold is defined for unfolding only");
  if (cfg.lambda_mode == LambdaMode::theorem && !(cfg.rank && *cfg.rank >= 1))
    throw std::invalid_argument("complete_contraction: theorem threshold needs the rank r");
  if (cfg.lambda_mode == LambdaMode::fixed && !(cfg.lambda_value >= 0.0))
    throw std::invalid_argument("complete_contraction: fixed threshold must be non-negative");

  const int d = y.dim();
  CompletionResult out;
  auto& diag = out.diagnostics;
  diag.algorithm = "contract";
  diag.n = y.n();

  const double delta = delta_from_mask(y.mask());
  const auto split = split_three(y.mask(), delta, cfg.split, cfg.seed);
  diag.delta = delta;
  diag.split_sizes[0] = split.i.size();
  diag.split_sizes[1] = split.j.size();
  diag.split_sizes[2] = split.k.size();
  diag.split_rounding_slack = split.rounding_slack;
  if (split.rounding_slack > 0.5) diag.warnings.push_back("exact split targets are non-integral; cell counts rounded");

  const Matrix w = contract(project_mask(y, split.i).tensor(), project_mask(y, split.j).tensor(), delta);

  Vector values;
  Matrix vectors;
  if (cfg.side == ContractionSide::left_singular) {
    auto s = svd(w);
    values = std::move(s.values);
    vectors = std::move(s.left);
    diag.spectral_norm = values.size() ? values(0) : 0.0;
  } else {
    auto e = sym_eig(w);
    values = std::move(e.values);
    vectors = std::move(e.vectors);
    diag.spectral_norm = op_norm(w);
  }

  const double lambda = cfg.lambda_mode == LambdaMode::fixed
                            ? cfg.lambda_value
                            : lambda_star_theorem2(static_cast<double>(y.n()), d, *cfg.rank);
  diag.lambda_star = lambda;

  Eigen::Index keep = 0;
  if (diag.spectral_norm > 0.0)
    while (keep < values.size() && values(keep) >= lambda) ++keep;
  const SpectralProjector q = keep == 0 ? SpectralProjector(w.rows(), lambda)
                                        : SpectralProjector(Matrix(vectors.leftCols(keep)), lambda);
  diag.rank_q = q.rank();

  const Tensor rescaled = (1.0 / delta) * project_mask(y, split.k).tensor();
  out.estimate = apply_mode_projection(rescaled, q, ProjectionPattern::contraction);
  diag.elapsed_seconds = clock.seconds();
  return out;
}

}  // namespace tensorcomp
