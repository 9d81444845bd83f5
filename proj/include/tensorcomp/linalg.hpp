#pragma once

// Dense spectral kernels: symmetric eigendecomposition, SVD, matrix norms,
// thresholded spectral projectors and the sin-theta subspace distance.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Dense>
#include <Eigen/SVD>

namespace tensorcomp {

using Matrix = Eigen::MatrixXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Relative tolerance used for numerical ranks throughout the library.
inline constexpr double kDefaultRankTolerance = 1e-9;

template <typename Derived>
double frobenius(const Eigen::MatrixBase<Derived>& m) {
  return m.norm();
}

template <typename Derived>
double max_abs(const Eigen::MatrixBase<Derived>& m) {
  if (m.size() == 0) return 0.0;
  return m.cwiseAbs().maxCoeff();
}

/// Singular values in descending order.
template <typename Derived>
Vector singular_values(const Eigen::MatrixBase<Derived>& m) {
  if (m.size() == 0) return Vector{};
  Eigen::BDCSVD<Matrix> solver(m.derived().template cast<double>().eval());
  return solver.singularValues();
}

template <typename Derived>
double op_norm(const Eigen::MatrixBase<Derived>& m) {
  if (m.size() == 0) return 0.0;
  return singular_values(m)(0);
}

/// Number of singular values strictly above `tol` times the largest one.
inline int rank_from_singular_values(const Vector& sv, double tol = kDefaultRankTolerance) {
  if (sv.size() == 0 || sv(0) <= 0.0) return 0;
  const double cut = tol * sv(0);
  int r = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > cut) ++r;
  return r;
}

template <typename Derived>
int numerical_rank(const Eigen::MatrixBase<Derived>& m, double tol = kDefaultRankTolerance) {
  return rank_from_singular_values(singular_values(m), tol);
}

struct DiagSplit {
  Matrix diagonal;
  Matrix off_diagonal;
};

/// Splits a square matrix into its diagonal part and the remainder.
inline DiagSplit diag_split(const Matrix& m) {
  if (m.rows() != m.cols())
    throw std::invalid_argument("diag_split: matrix is " + std::to_string(m.rows()) + "x" +
                                std::to_string(m.cols()) + ", expected square");
  DiagSplit out;
  out.diagonal = m.diagonal().asDiagonal();
  out.off_diagonal = m;
  out.off_diagonal.diagonal().setZero();
  return out;
}

struct SymmetricEigen {
  Vector values;   // descending
  Matrix vectors;  // column i pairs with values(i)
};

/// Eigendecomposition of (M + M^T)/2 with eigenvalues sorted descending.
inline SymmetricEigen sym_eig(const Matrix& m) {
  if (m.rows() != m.cols())
    throw std::invalid_argument("sym_eig: matrix must be square");
  SymmetricEigen out;
  if (m.size() == 0) return out;
  const Matrix sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("sym_eig: eigensolver did not converge");
  // Eigen returns ascending order.
  out.values = solver.eigenvalues().reverse();
  out.vectors = solver.eigenvectors().rowwise().reverse();
  return out;
}

struct SingularValueDecomposition {
  Vector values;  // descending, non-negative
  Matrix left;
  Matrix right;
};

inline SingularValueDecomposition svd(const Matrix& m) {
  SingularValueDecomposition out;
  if (m.size() == 0) return out;
  Eigen::BDCSVD<Matrix> solver(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  out.values = solver.singularValues();
  out.left = solver.matrixU();
  out.right = solver.matrixV();
  return out;
}

/// Orthogonal projector represented by an orthonormal basis of its range.
class SpectralProjector {
 public:
  SpectralProjector() = default;

  /// Rank-zero projector on R^m.
  explicit SpectralProjector(Eigen::Index ambient_dim, double threshold = 0.0)
      : basis_(ambient_dim, 0), threshold_(threshold) {}

  /// `basis` must have orthonormal columns (checked to 1e-8).
  explicit SpectralProjector(Matrix basis, double threshold = 0.0)
      : basis_(std::move(basis)), threshold_(threshold) {
    if (basis_.cols() > 0) {
      const Matrix gram = basis_.transpose() * basis_;
      const double dev = (gram - Matrix::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
      if (dev > 1e-8)
        throw std::invalid_argument("SpectralProjector: basis columns are not orthonormal");
    }
  }

  static SpectralProjector identity(Eigen::Index m) {
    return SpectralProjector(Matrix::Identity(m, m));
  }

  Eigen::Index ambient_dim() const { return basis_.rows(); }
  Eigen::Index rank() const { return basis_.cols(); }
  double threshold() const { return threshold_; }
  const Matrix& basis() const { return basis_; }

  /// The m x m projector matrix basis * basis^T.
  Matrix matrix() const { return basis_ * basis_.transpose(); }

  /// Applies the projector to the columns of `x` (x has ambient_dim rows).
  template <typename Derived>
  Matrix apply(const Eigen::MatrixBase<Derived>& x) const {
    if (x.rows() != ambient_dim())
      throw std::invalid_argument("SpectralProjector::apply: dimension mismatch");
    if (rank() == 0) return Matrix::Zero(x.rows(), x.cols());
    return basis_ * (basis_.transpose() * x);
  }

 private:
  Matrix basis_;
  double threshold_ = 0.0;
};

enum class SpectrumSide {
  eigen,          // eigenvectors of (M + M^T)/2
  left_singular,  // left singular vectors of M
};

/// Projector onto the eigenvectors (or left singular vectors) of `m` whose
/// eigenvalue (singular value) is >= lambda_star.
inline SpectralProjector threshold_projector(const Matrix& m, double lambda_star,
                                             SpectrumSide side = SpectrumSide::eigen) {
  if (!(lambda_star >= 0.0))
    throw std::invalid_argument("threshold_projector: lambda_star must be non-negative");
  const Eigen::Index dim = m.rows();
  Vector values;
  Matrix vectors;
  if (side == SpectrumSide::eigen) {
    auto e = sym_eig(m);
    values = std::move(e.values);
    vectors = std::move(e.vectors);
  } else {
    auto s = svd(m);
    values = std::move(s.values);
    vectors = std::move(s.left);
  }
  Eigen::Index keep = 0;
  while (keep < values.size() && values(keep) >= lambda_star) ++keep;
  if (keep == 0) return SpectralProjector(dim, lambda_star);
  return SpectralProjector(Matrix(vectors.leftCols(keep)), lambda_star);
}

/// Projector onto the leading `rank` eigenvectors (or left singular vectors).
inline SpectralProjector leading_projector(const Matrix& m, Eigen::Index rank,
                                           SpectrumSide side = SpectrumSide::eigen) {
  if (rank < 0 || rank > m.rows())
    throw std::invalid_argument("leading_projector: rank out of range");
  if (rank == 0) return SpectralProjector(m.rows());
  Matrix vectors = side == SpectrumSide::eigen ? sym_eig(m).vectors : svd(m).left;
  return SpectralProjector(Matrix(vectors.leftCols(rank)));
}

/// ||(I - U U^T) P P^T||_op for orthonormal bases P, U of the two subspaces.
inline double sin_theta(const SpectralProjector& p, const SpectralProjector& u) {
  if (p.ambient_dim() != u.ambient_dim())
    throw std::invalid_argument("sin_theta: ambient dimensions differ");
  if (p.rank() == 0) return 0.0;
  Matrix residual = p.basis();
  if (u.rank() > 0) residual -= u.basis() * (u.basis().transpose() * p.basis());
  return std::clamp(op_norm(residual), 0.0, 1.0);
}

}  // namespace tensorcomp
