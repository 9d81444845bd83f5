#pragma once

// Completion of symmetric order-k tensors through the balanced unfolding:
//   1. split E into halves E1, E2;
//   2. B = delta1^-1 diag(Z Z^T) + delta1^-2 offdiag(Z Z^T), Z = unfold(Pi_E1 Y);
//   3. Q = projector onto eigenvectors of B with eigenvalue >= lambda_star;
//   4. return Qcal(Y1 + Y2 / delta2), Qcal the tensor lift of Q.
// "log d" is the natural logarithm everywhere.

#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "completion.hpp"
#include "linalg.hpp"
#include "matrix_estimation.hpp"
#include "mode_projection.hpp"
#include "random.hpp"
#include "tensor.hpp"

namespace tensorcomp {

enum class SplitMode {
  exact,      // prescribed subset sizes, uniformly random assignment
  bernoulli,  // independent per-entry assignment
};

inline const char* to_string(SplitMode m) { return m == SplitMode::exact ? "exact" : "bernoulli"; }

inline SplitMode parse_split_mode(const std::string& s) {
  if (s == "exact" || s == "exact-n" || s == "exact-sizes") return SplitMode::exact;
  if (s == "bernoulli") return SplitMode::bernoulli;
  throw std::invalid_argument("unknown split/sampling mode '" + s + "' (expected exact|bernoulli)");
}

struct TwoWaySplit {
  ObservationMask first;
  ObservationMask second;
  double delta1 = 0.0;  // n / (2 d^k)
};

/// Random partition of E. Exact mode gives E1 ceil(n/2) entries and E2 the
/// rest; Bernoulli mode sends each entry to E1 independently with chance 1/2.
inline TwoWaySplit split_two(const ObservationMask& e, std::uint64_t seed, SplitMode mode = SplitMode::exact) {
  if (e.empty()) throw std::invalid_argument("split_two: empty mask");
  Rng rng(seed);
  std::vector<std::uint64_t> first;
  std::vector<std::uint64_t> second;
  if (mode == SplitMode::exact) {
    std::vector<std::uint64_t> entries(e.entries().begin(), e.entries().end());
    rng.shuffle(entries);
    const std::size_t half = (entries.size() + 1) / 2;
    first.assign(entries.begin(), entries.begin() + static_cast<std::ptrdiff_t>(half));
    second.assign(entries.begin() + static_cast<std::ptrdiff_t>(half), entries.end());
  } else {
    for (std::uint64_t lin : e.entries()) (rng.bernoulli(0.5) ? first : second).push_back(lin);
  }
  TwoWaySplit out{ObservationMask(e.order(), e.dim(), std::move(first)),
                  ObservationMask(e.order(), e.dim(), std::move(second)),
                  static_cast<double>(e.size()) / (2.0 * static_cast<double>(e.capacity()))};
  return out;
}

/// B from the first-half observations, on the floor(k/2) x ceil(k/2) unfolding.
inline Matrix build_B(const Tensor& y1, double delta1) {
  if (!(delta1 > 0.0 && delta1 <= 1.0)) throw std::invalid_argument("build_B: delta1 must lie in (0, 1]");
  const int a = y1.order() / 2;
  const int b = y1.order() - a;
  return bhat(unfold(y1, a, b).values, delta1);
}

/// Rank ceiling of the unfolding guarantee: d^{3/4} (k = 3), d^{k/2} (even k),
/// d^{k/2 - 1} (odd k >= 5).
inline double r_max(int d, int k) {
  const double dd = d;
  if (k == 3) return std::pow(dd, 0.75);
  if (k % 2 == 0) return std::pow(dd, k / 2.0);
  return std::pow(dd, k / 2.0 - 1.0);
}

/// Canonical slack t with t^{1/2} = (k log d)^8 mu^{3/2}; with it the
/// slack-parameterized threshold and window reduce to the closed forms below.
inline double canonical_slack(const UnfoldingParams& p, int d, int k) {
  return std::pow(k * std::log(static_cast<double>(d)), 16) * std::pow(p.mu, 3);
}

namespace detail {
inline void require_positive(double v, const char* name, const char* where) {
  if (!(v > 0.0)) throw std::invalid_argument(std::string(where) + ": " + name + " must be positive");
}
inline void require_params(const UnfoldingParams& p, const char* where) {
  require_positive(p.big_r, "R", where);
  require_positive(p.alpha, "alpha", where);
  require_positive(p.mu, "mu", where);
}
}  // namespace detail

/// lambda*(t) = eta^{2/3} ||B||_op with
///   eta = 8 (k log d)^4 t^{1/2} (alpha R / mu) / (d^{k/2} delta),  delta = n / d^k.
inline double lambda_star_slack(const UnfoldingParams& p, double t, double n, int d, int k, double opnorm_b) {
  detail::require_params(p, "lambda_star_slack");
  detail::require_positive(t, "t", "lambda_star_slack");
  detail::require_positive(n, "n", "lambda_star_slack");
  detail::require_positive(d, "d", "lambda_star_slack");
  detail::require_positive(k, "k", "lambda_star_slack");
  detail::require_positive(opnorm_b, "||B||_op", "lambda_star_slack");
  const double dk = std::pow(static_cast<double>(d), k);
  const double delta = n / dk;
  const double varpi = p.alpha * p.big_r / p.mu;
  const double eta = 8.0 * std::pow(k * std::log(static_cast<double>(d)), 4) * std::sqrt(t) * varpi /
                     (std::pow(static_cast<double>(d), k / 2.0) * delta);
  return std::pow(eta, 2.0 / 3.0) * opnorm_b;
}

/// lambda* = 4 (k log d)^8 (alpha R mu^{1/2} / (n / d^{k/2}))^{2/3} ||B||_op.
inline double lambda_star_theorem1(const UnfoldingParams& p, double n, int d, int k, double opnorm_b) {
  detail::require_params(p, "lambda_star_theorem1");
  detail::require_positive(n, "n", "lambda_star_theorem1");
  detail::require_positive(d, "d", "lambda_star_theorem1");
  detail::require_positive(k, "k", "lambda_star_theorem1");
  detail::require_positive(opnorm_b, "||B||_op", "lambda_star_theorem1");
  const double klog = k * std::log(static_cast<double>(d));
  const double ratio = p.alpha * p.big_r * std::sqrt(p.mu) / (n / std::pow(static_cast<double>(d), k / 2.0));
  return 4.0 * std::pow(klog, 8) * std::pow(ratio, 2.0 / 3.0) * opnorm_b;
}

/// lambda* = factor (d^{k/2} / n)^{2/3} ||B||_op; factor 3 and k = 3 give
/// the threshold used for the Monte-Carlo experiments.
inline double lambda_star_simulation(double n, int d, double opnorm_b, double factor = 3.0, int k = 3) {
  detail::require_positive(n, "n", "lambda_star_simulation");
  detail::require_positive(d, "d", "lambda_star_simulation");
  return factor * std::pow(std::pow(static_cast<double>(d), k / 2.0) / n, 2.0 / 3.0) * opnorm_b;
}

struct RegimeCheck {
  double n_lower = 0.0;
  double n_upper = 0.0;
  double rank_ceiling = 0.0;
  bool n_in_window = false;
  bool rank_ok = false;
  std::vector<std::string> warnings;
};

/// Sample-size window 32 (k log d)^4 t^{1/2} varpi d^{k/2} <= n <= t varpi d^b
/// (varpi = alpha R / mu) and the rank condition R <= r_max. With the
/// canonical slack this is 32 (k log d)^12 alpha R mu^{1/2} d^{k/2} <= n <=
/// (k log d)^16 alpha R mu^2 d^b.
inline RegimeCheck regime_check(const UnfoldingParams& p, double n, int d, int k,
                                std::optional<double> slack = std::nullopt) {
  detail::require_params(p, "regime_check");
  const double t = slack.value_or(canonical_slack(p, d, k));
  const double varpi = p.alpha * p.big_r / p.mu;
  const int b = k - k / 2;
  RegimeCheck out;
  out.n_lower = 32.0 * std::pow(k * std::log(static_cast<double>(d)), 4) * std::sqrt(t) * varpi *
                std::pow(static_cast<double>(d), k / 2.0);
  out.n_upper = t * varpi * std::pow(static_cast<double>(d), b);
  out.rank_ceiling = r_max(d, k);
  out.n_in_window = n >= out.n_lower && n <= out.n_upper;
  out.rank_ok = p.big_r <= out.rank_ceiling;
  std::ostringstream os;
  os.precision(6);
  if (!out.n_in_window) {
    os << "n=" << n << " outside guarantee window [" << out.n_lower << ", " << out.n_upper << "]";
    out.warnings.push_back(os.str());
    os.str("");
  }
  if (!out.rank_ok) {
    os << "R=" << p.big_r << " exceeds r_max=" << out.rank_ceiling;
    out.warnings.push_back(os.str());
  }
  return out;
}

/// Qcal(Y1 + Y2 / delta2).
inline Tensor denoise(const Tensor& y1, const Tensor& y2, double delta2, const SpectralProjector& q) {
  if (!(delta2 > 0.0)) throw std::invalid_argument("denoise: delta2 must be positive");
  if (!y1.same_shape(y2)) throw std::invalid_argument("denoise: Y1 and Y2 shapes differ");
  Tensor rescaled = y1 + (1.0 / delta2) * y2;
  return apply_mode_projection(rescaled, q, ProjectionPattern::unfolding);
}

struct UnfoldConfig {
  LambdaMode lambda_mode = LambdaMode::simulation;
  double lambda_value = 0.0;       // used when lambda_mode == fixed
  double simulation_factor = 3.0;  // used when lambda_mode == simulation
  /// Required for lambda_mode == theorem; also enables the regime check.
  std::optional<UnfoldingParams> params;
  /// Slack t >= 1; unset means the canonical choice (closed-form threshold).
  std::optional<double> slack;
  SplitMode split = SplitMode::exact;
  std::uint64_t seed = 0;
};

inline CompletionResult complete_unfold(const PartialTensor& y, const UnfoldConfig& cfg) {
  detail::Stopwatch clock;
  const int k = y.order();
  const int d = y.dim();
  if (k < 3) throw std::invalid_argument("complete_unfold: order must be >= 3");
  if (y.n() == 0) throw std::invalid_argument("complete_unfold: empty mask");
  if (cfg.lambda_mode == LambdaMode::theorem && !cfg.params)
    throw std::invalid_argument("complete_unfold: theorem threshold needs unfolding parameters");
  if (cfg.lambda_mode == LambdaMode::fixed && !(cfg.lambda_value >= 0.0))
    throw std::invalid_argument("complete_unfold: fixed threshold must be non-negative");
  if (cfg.slack && !(*cfg.slack >= 1.0)) throw std::invalid_argument("complete_unfold: slack t must be >= 1");

  CompletionResult out;
  auto& diag = out.diagnostics;
  diag.algorithm = "unfold";
  diag.n = y.n();

  const auto split = split_two(y.mask(), cfg.seed, cfg.split);
  const Tensor y1 = project_mask(y, split.first).tensor();
  const Tensor y2 = project_mask(y, split.second).tensor();
  diag.split_sizes[0] = split.first.size();
  diag.split_sizes[1] = split.second.size();
  diag.delta = split.delta1;
  diag.delta2 = split.delta1 / (1.0 - split.delta1);

  const Matrix b = build_B(y1, split.delta1);
  const auto eig = sym_eig(b);
  const double op_b = eig.values.size() == 0
                          ? 0.0
                          : std::max(std::abs(eig.values(0)), std::abs(eig.values(eig.values.size() - 1)));
  diag.spectral_norm = op_b;

  const double n = static_cast<double>(y.n());
  double lambda = 0.0;
  switch (cfg.lambda_mode) {
    case LambdaMode::fixed: lambda = cfg.lambda_value; break;
    case LambdaMode::simulation: lambda = lambda_star_simulation(n, d, op_b, cfg.simulation_factor, k); break;
    case LambdaMode::theorem:
      if (op_b == 0.0) {
        lambda = 0.0;
      } else {
        lambda = cfg.slack ? lambda_star_slack(*cfg.params, *cfg.slack, n, d, k, op_b)
                           : lambda_star_theorem1(*cfg.params, n, d, k, op_b);
      }
      break;
  }
  diag.lambda_star = lambda;
  if (cfg.params) diag.warnings = regime_check(*cfg.params, n, d, k, cfg.slack).warnings;

  Eigen::Index keep = 0;
  // A zero B has no signal; lambda = 0 must not select its null space.
  if (op_b > 0.0)
    while (keep < eig.values.size() && eig.values(keep) >= lambda) ++keep;
  const SpectralProjector q = keep == 0 ? SpectralProjector(b.rows(), lambda)
                                        : SpectralProjector(Matrix(eig.vectors.leftCols(keep)), lambda);
  diag.rank_q = q.rank();

  out.estimate = denoise(y1, y2, diag.delta2, q);
  diag.elapsed_seconds = clock.seconds();
  return out;
}

}  // namespace tensorcomp
