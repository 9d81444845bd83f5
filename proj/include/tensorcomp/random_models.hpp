#pragma once

// Random symmetric low-rank tensors T = sum_s a_s^{(x)k} and random
// observation masks.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "linalg.hpp"
#include "random.hpp"
#include "tensor.hpp"

namespace tensorcomp {

enum class ComponentDistribution {
  gaussian,    // a_s ~ N(0, I_d / d)
  rademacher,  // entries +-1/sqrt(d) with equal probability
};

struct RandomTensorSpec {
  int d = 0;
  int r = 0;
  int k = 3;
  ComponentDistribution distribution = ComponentDistribution::gaussian;
  std::uint64_t seed = 0;
  /// Subgaussian proxy; recorded only. Both distributions satisfy it with tau^2 = 1.
  double tau = 1.0;
};

struct GeneratedTensor {
  Tensor tensor;
  Matrix components;  // r x d, row s is a_s
};

/// T_u = sum_s prod_m a_{s, u_m}. Each sorted index class is evaluated once
/// and broadcast, so the output is exactly symmetric.
inline Tensor from_components(const Matrix& components, int k) {
  if (k < 1) throw std::invalid_argument("from_components: order must be positive");
  if (components.cols() < 1) throw std::invalid_argument("from_components: vectors must be non-empty");
  const int d = static_cast<int>(components.cols());
  const auto r = components.rows();
  std::vector<double> values(checked_pow(static_cast<std::uint64_t>(d), k));
  detail::for_each_with_sorted(k, d, values.size(), [&](std::uint64_t s, std::uint64_t lin, std::span<const int> sorted) {
    if (s != lin) {
      values[lin] = values[s];
      return;
    }
    double sum = 0.0;
    for (Eigen::Index c = 0; c < r; ++c) {
      double prod = 1.0;
      for (int u : sorted) prod *= components(c, u);
      sum += prod;
    }
    values[lin] = sum;
  });
  return Tensor(k, d, std::move(values), true);
}

inline Tensor from_components(const std::vector<Vector>& vectors, int k) {
  if (vectors.empty()) throw std::invalid_argument("from_components: no vectors");
  const auto d = vectors.front().size();
  Matrix m(static_cast<Eigen::Index>(vectors.size()), d);
  for (std::size_t s = 0; s < vectors.size(); ++s) {
    if (vectors[s].size() != d) throw std::invalid_argument("from_components: vector length mismatch");
    m.row(static_cast<Eigen::Index>(s)) = vectors[s].transpose();
  }
  return from_components(m, k);
}

inline Matrix random_components(int r, int d, ComponentDistribution dist, Rng& rng) {
  Matrix a(r, d);
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  for (int s = 0; s < r; ++s)
    for (int i = 0; i < d; ++i)
      a(s, i) = dist == ComponentDistribution::gaussian ? scale * rng.normal()
                                                        : (rng.bernoulli(0.5) ? scale : -scale);
  return a;
}

inline GeneratedTensor generate(const RandomTensorSpec& spec) {
  if (spec.d < 1 || spec.r < 1 || spec.k < 1)
    throw std::invalid_argument("generate: d, r, k must be positive");
  Rng rng(spec.seed);
  GeneratedTensor out;
  out.components = random_components(spec.r, spec.d, spec.distribution, rng);
  out.tensor = from_components(out.components, spec.k);
  return out;
}

/// Uniformly random n-subset of [d]^k (Floyd's algorithm).
inline ObservationMask sample_exact(int k, int d, std::uint64_t n, Rng& rng) {
  const auto capacity = checked_pow(static_cast<std::uint64_t>(d), k);
  if (n > capacity)
    throw std::invalid_argument("sample_exact: n = " + std::to_string(n) + " exceeds d^k = " + std::to_string(capacity));
  std::unordered_set<std::uint64_t> chosen;
  chosen.reserve(static_cast<std::size_t>(n));
  std::vector<std::uint64_t> entries;
  entries.reserve(static_cast<std::size_t>(n));
  for (std::uint64_t j = capacity - n; j < capacity; ++j) {
    const std::uint64_t t = rng.below(j + 1);
    const std::uint64_t pick = chosen.contains(t) ? j : t;
    chosen.insert(pick);
    entries.push_back(pick);
  }
  return ObservationMask(k, d, std::move(entries));
}

/// Each position of [d]^k revealed independently with probability delta.
inline ObservationMask sample_bernoulli(int k, int d, double delta, Rng& rng) {
  if (!(delta >= 0.0 && delta <= 1.0)) throw std::invalid_argument("sample_bernoulli: delta must lie in [0, 1]");
  const auto capacity = checked_pow(static_cast<std::uint64_t>(d), k);
  std::vector<std::uint64_t> entries;
  for (std::uint64_t lin = 0; lin < capacity; ++lin)
    if (rng.bernoulli(delta)) entries.push_back(lin);
  return ObservationMask(k, d, std::move(entries));
}

inline const char* to_string(ComponentDistribution d) {
  return d == ComponentDistribution::gaussian ? "gaussian" : "rademacher";
}

inline ComponentDistribution parse_distribution(const std::string& s) {
  if (s == "gaussian") return ComponentDistribution::gaussian;
  if (s == "rademacher") return ComponentDistribution::rademacher;
  throw std::invalid_argument("unknown distribution '" + s + "' (expected gaussian|rademacher)");
}

}  // namespace tensorcomp
