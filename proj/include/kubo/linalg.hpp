#pragma once

#include <algorithm>
#include <numeric>
#include <vector>

#include <Eigen/Eigenvalues>

#include "kubo/core.hpp"

namespace kubo {

/// Eigenpairs of a Hermitian matrix, energies ascending.
struct EigenDecomposition {
  Vector energies;
  Matrix vectors;

  /// V^dagger M V
  Matrix to_eigenbasis(const Matrix& M) const { return vectors.adjoint() * M * vectors; }
  /// V M V^dagger
  Matrix from_eigenbasis(const Matrix& M) const { return vectors * M * vectors.adjoint(); }

  double spectral_radius() const {
    return energies.size() == 0 ? 0.0 : energies.cwiseAbs().maxCoeff();
  }
};

inline double max_abs(const Matrix& M) { return M.size() == 0 ? 0.0 : M.cwiseAbs().maxCoeff(); }

inline bool is_hermitian(const Matrix& M, double rtol = 1e-12) {
  if (M.rows() != M.cols()) return false;
  return max_abs(M - M.adjoint()) <= rtol * std::max(1.0, max_abs(M));
}

inline bool is_diagonal(const Matrix& M) {
  for (Eigen::Index j = 0; j < M.cols(); ++j)
    for (Eigen::Index i = 0; i < M.rows(); ++i)
      if (i != j && M(i, j) != cplx(0.0)) return false;
  return true;
}

/// Hermitian eigensolver. Diagonal input is handled by sorting.
inline EigenDecomposition diagonalize(const Matrix& H) {
  const Eigen::Index n = H.rows();
  EigenDecomposition out;
  if (n == 0) {
    out.energies.resize(0);
    out.vectors.resize(0, 0);
    return out;
  }
  if (is_diagonal(H)) {
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index(0));
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return H(a, a).real() < H(b, b).real(); });
    out.energies.resize(n);
    out.vectors = Matrix::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
      out.energies(j) = H(order[j], order[j]).real();
      out.vectors(order[j], j) = 1.0;
    }
    return out;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(H);
  if (es.info() != Eigen::Success) throw NumericalError("Hermitian eigensolver failed");
  out.energies = es.eigenvalues();
  out.vectors = es.eigenvectors();
  return out;
}

/// f(H) through the eigen-decomposition.
template <class F>
Matrix matrix_function(const EigenDecomposition& eig, F&& f) {
  CVector d(eig.energies.size());
  for (Eigen::Index i = 0; i < d.size(); ++i) d(i) = f(eig.energies(i));
  return eig.vectors * d.asDiagonal() * eig.vectors.adjoint();
}

/// 1e-8 * max(1, spectral radius)
inline double default_degeneracy_tolerance(double spectral_radius) {
  return 1e-8 * std::max(1.0, spectral_radius);
}

}  // namespace kubo
