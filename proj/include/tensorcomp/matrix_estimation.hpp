#pragma once

// Column-space estimation for partially revealed wide matrices, together
// with the incoherence and coherence diagnostics used to state when it works.

#include <cmath>
#include <stdexcept>

#include "linalg.hpp"
#include "tensor.hpp"

namespace tensorcomp {

/// Rescaled second moment of Y = Pi_E(X) with entries revealed at rate delta:
///   delta^-1 * diag(Y Y^T) + delta^-2 * offdiag(Y Y^T).
/// Unbiased for X X^T under i.i.d. Bernoulli(delta) reveals.
template <typename Derived>
Matrix bhat(const Eigen::MatrixBase<Derived>& y, double delta) {
  if (!(delta > 0.0 && delta <= 1.0))
    throw std::invalid_argument("bhat: delta must lie in (0, 1]");
  Matrix lower = Matrix::Zero(y.rows(), y.rows());
  lower.template selfadjointView<Eigen::Lower>().rankUpdate(y.derived().template cast<double>());
  Matrix gram = lower.template selfadjointView<Eigen::Lower>();
  const double off = 1.0 / (delta * delta);
  const double on = 1.0 / delta;
  for (Eigen::Index j = 0; j < gram.cols(); ++j)
    for (Eigen::Index i = 0; i < gram.rows(); ++i) gram(i, j) *= (i == j ? on : off);
  return gram;
}

/// (lambda, gamma, rho) such that
///   d1 max_i ||X^T e_i||^2 <= lambda ||X||_op^2,
///   d2 max_j ||X e_j||^2   <= rho    ||X||_op^2,
///   d1 d2 ||X||_inf^2      <= lambda gamma rho ||X||_op^2.
struct IncoherenceParams {
  double lambda = 0.0;
  double gamma = 0.0;
  double rho = 0.0;
};

/// Minimal lambda and rho (first two conditions tight); gamma then makes the
/// entrywise condition an equality.
inline IncoherenceParams incoherence_params(const Matrix& x) {
  const double op = op_norm(x);
  if (x.size() == 0 || op == 0.0) throw std::invalid_argument("incoherence_params: zero matrix");
  const double d1 = static_cast<double>(x.rows());
  const double d2 = static_cast<double>(x.cols());
  const double op2 = op * op;
  IncoherenceParams p;
  p.lambda = d1 * x.rowwise().squaredNorm().maxCoeff() / op2;
  p.rho = d2 * x.colwise().squaredNorm().maxCoeff() / op2;
  const double inf = max_abs(x);
  p.gamma = d1 * d2 * inf * inf / (p.lambda * p.rho * op2);
  return p;
}

/// (m / r) * max_i ||M^T e_i||^2 for an m x r matrix with orthonormal columns.
inline double coherence(const Matrix& basis) {
  const auto r = basis.cols();
  if (r == 0) throw std::invalid_argument("coherence: empty basis");
  const Matrix gram = basis.transpose() * basis;
  if ((gram - Matrix::Identity(r, r)).cwiseAbs().maxCoeff() > 1e-8)
    throw std::invalid_argument("coherence: basis columns are not orthonormal");
  return static_cast<double>(basis.rows()) / static_cast<double>(r) *
         basis.rowwise().squaredNorm().maxCoeff();
}

inline double coherence(const SpectralProjector& q) { return coherence(q.basis()); }

/// (R, alpha, mu) of the balanced unfolding X = unfold(T, floor(k/2), ceil(k/2)):
///   rank X <= R,  d^k ||X||_inf^2 <= alpha ||X||_F^2,  mu ||X||_F^2 = R ||X||_op^2.
struct UnfoldingParams {
  int big_r = 0;
  double alpha = 0.0;
  double mu = 0.0;
};

inline UnfoldingParams unfolding_params(const Tensor& t, double tol = kDefaultRankTolerance) {
  if (t.order() < 2) throw std::invalid_argument("unfolding_params: order must be >= 2");
  const int a = t.order() / 2;
  const int b = t.order() - a;
  const auto x = unfold(t, a, b);
  const double fro2 = x.values.squaredNorm();
  if (fro2 == 0.0) throw std::invalid_argument("unfolding_params: zero tensor");
  const Vector sv = singular_values(x.values);
  const double inf = max_abs(x.values);
  UnfoldingParams p;
  p.big_r = rank_from_singular_values(sv, tol);
  p.alpha = static_cast<double>(t.size()) * inf * inf / fro2;
  p.mu = p.big_r * sv(0) * sv(0) / fro2;
  return p;
}

/// Estimates a column of X from its partially revealed copy y (reveal rate
/// delta_prime) given an estimate Q of the column space: Q Q^T y / delta'.
inline Vector column_complete(const SpectralProjector& q, const Vector& y, double delta_prime) {
  if (!(delta_prime > 0.0 && delta_prime <= 1.0))
    throw std::invalid_argument("column_complete: delta' must lie in (0, 1]");
  return q.apply(y) / delta_prime;
}

}  // namespace tensorcomp
