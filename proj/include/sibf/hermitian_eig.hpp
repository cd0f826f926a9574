#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Jacobi>

namespace sibf {

/// Full eigendecomposition of a complex Hermitian matrix by cyclic Jacobi
/// rotations. Intended for the small matrices of this codebase (one per
/// microphone array, N <= 8 or so).
///
/// Output conventions, all deterministic for identical input:
///   - eigenvalues sorted descending, ties kept in pre-sort order
///     (stable sort, so a diagonal input keeps its index order);
///   - eigenvectors are orthonormal columns, aligned with eigenvalues();
///   - each eigenvector is phased so its largest-magnitude entry (first such
///     index on ties) is real and nonnegative.
///
/// Only the upper triangle and the real part of the diagonal are referenced,
/// like a LAPACK 'U' solver.
template <typename Real = double>
class HermitianEigenSolver {
 public:
  using Complex = std::complex<Real>;
  using MatrixType = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic>;
  using RealVectorType = Eigen::Matrix<Real, Eigen::Dynamic, 1>;

  HermitianEigenSolver() = default;

  explicit HermitianEigenSolver(const Eigen::Ref<const MatrixType>& m) {
    compute(m);
  }

  HermitianEigenSolver& compute(const Eigen::Ref<const MatrixType>& m) {
    if (m.rows() != m.cols()) {
      throw std::invalid_argument("hermitian_eig: matrix must be square");
    }
    if (!m.allFinite()) {
      throw std::invalid_argument("hermitian_eig: non-finite entries");
    }
    const Eigen::Index n = m.rows();

    // Working copy from the upper triangle; the lower half is rebuilt so the
    // rotation updates can touch full rows/columns.
    MatrixType a(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
      a(j, j) = Complex(m(j, j).real(), Real(0));
      for (Eigen::Index i = 0; i < j; ++i) {
        a(i, j) = m(i, j);
        a(j, i) = std::conj(m(i, j));
      }
    }

    MatrixType v = MatrixType::Identity(n, n);
    const Real scale = n > 0 ? a.cwiseAbs().maxCoeff() : Real(0);
    const Real off_tol = Real(1e-14) * scale;

    if (scale > Real(0)) {
      constexpr int kMaxSweeps = 64;
      for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        Real off_max = Real(0);
        for (Eigen::Index p = 0; p + 1 < n; ++p) {
          for (Eigen::Index q = p + 1; q < n; ++q) {
            off_max = std::max(off_max, std::abs(a(p, q)));
          }
        }
        if (off_max < off_tol) break;

        for (Eigen::Index p = 0; p + 1 < n; ++p) {
          for (Eigen::Index q = p + 1; q < n; ++q) {
            Eigen::JacobiRotation<Complex> rot;
            if (!rot.makeJacobi(a, p, q)) continue;
            a.applyOnTheLeft(p, q, rot.adjoint());
            a.applyOnTheRight(p, q, rot);
            a(p, q) = Complex(0);
            a(q, p) = Complex(0);
            a(p, p) = Complex(a(p, p).real(), Real(0));
            a(q, q) = Complex(a(q, q).real(), Real(0));
            v.applyOnTheRight(p, q, rot);
          }
        }
      }
    }

    // Descending order with a stable tie-break on the pre-sort index.
    std::vector<Eigen::Index> order(static_cast<size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index(0));
    std::stable_sort(order.begin(), order.end(),
                     [&a](Eigen::Index i, Eigen::Index j) {
                       return a(i, i).real() > a(j, j).real();
                     });

    eigenvalues_.resize(n);
    eigenvectors_.resize(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
      eigenvalues_(k) = a(order[k], order[k]).real();
      eigenvectors_.col(k) = v.col(order[k]);
    }

    for (Eigen::Index k = 0; k < n; ++k) {
      auto col = eigenvectors_.col(k);
      col.normalize();
      Eigen::Index imax = 0;
      Real amax = Real(0);
      for (Eigen::Index i = 0; i < n; ++i) {
        const Real ai = std::abs(col(i));
        if (ai > amax) {
          amax = ai;
          imax = i;
        }
      }
      if (amax > Real(0)) {
        col *= std::conj(col(imax)) / amax;
        col(imax) = Complex(amax, Real(0));
      }
    }
    return *this;
  }

  /// Eigenvalues in descending order.
  const RealVectorType& eigenvalues() const { return eigenvalues_; }
  /// Orthonormal eigenvector columns matching eigenvalues().
  const MatrixType& eigenvectors() const { return eigenvectors_; }

 private:
  RealVectorType eigenvalues_;
  MatrixType eigenvectors_;
};

/// Weighted second-moment matrix of a set of complex frame vectors:
/// (1/T) sum_t frames.col(t) frames.col(t)^H / weights(t).
/// Accumulated on the upper triangle and mirrored, so the result is Hermitian
/// by construction; the accumulation order is fixed (t ascending).
template <typename DerivedU, typename DerivedW>
Eigen::Matrix<typename DerivedU::Scalar, Eigen::Dynamic, Eigen::Dynamic>
weighted_covariance(const Eigen::MatrixBase<DerivedU>& frames,
                    const Eigen::DenseBase<DerivedW>& weights) {
  using Scalar = typename DerivedU::Scalar;
  using Real = typename Eigen::NumTraits<Scalar>::Real;
  using MatrixType = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  const Eigen::Index n = frames.rows();
  const Eigen::Index t_count = frames.cols();
  if (t_count < 1) {
    throw std::invalid_argument("weighted_covariance: empty input");
  }
  if (weights.size() != t_count) {
    throw std::invalid_argument(
        "weighted_covariance: weight count does not match frame count");
  }

  MatrixType acc = MatrixType::Zero(n, n);
  for (Eigen::Index t = 0; t < t_count; ++t) {
    const Real w = static_cast<Real>(weights(t));
    if (!(w > Real(0)) || !std::isfinite(w)) {
      throw std::invalid_argument(
          "weighted_covariance: weights must be positive and finite");
    }
    acc.template selfadjointView<Eigen::Upper>().rankUpdate(
        frames.derived().col(t), Real(1) / w);
  }
  MatrixType cov = acc.template selfadjointView<Eigen::Upper>();
  cov /= static_cast<Real>(t_count);
  for (Eigen::Index i = 0; i < n; ++i) {
    cov(i, i) = Scalar(cov(i, i).real(), Real(0));
  }
  return cov;
}

/// Row-vector form of the eigenvector belonging to the smallest eigenvalue:
/// the conjugate transpose of the last eigenvector column. Unit norm, phased
/// by the solver's convention.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, 1, Eigen::Dynamic> min_eigvec_row(
    const Eigen::MatrixBase<Derived>& m) {
  using Real = typename Eigen::NumTraits<typename Derived::Scalar>::Real;
  HermitianEigenSolver<Real> solver(m.derived());
  const Eigen::Index n = m.rows();
  return solver.eigenvectors().col(n - 1).adjoint();
}

}  // namespace sibf
