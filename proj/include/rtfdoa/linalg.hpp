#pragma once

#include <optional>

#include "rtfdoa/common.hpp"

namespace rtfdoa {

/// Lower-triangular L with L L^H = H + eps I, eps = diag_load_rel * trace(H) / P.
/// Only the lower triangle of H is read. Returns nullopt if the loaded matrix is not
/// positive definite.
std::optional<CMatrix> cholesky(const CMatrix& h, double diag_load_rel);

struct EigenPair {
  CVector vector;  // unit norm, largest-modulus entry real and positive
  double value = 0.0;
};

/// Eigenvector of the largest eigenvalue of a Hermitian matrix.
///
/// A few Rayleigh quotient iterations from `start` (when given) are tried first and accepted
/// only if the residual meets `tol * ||H||_F` and no eigenvalue exceeds the Ritz value by more
/// than residual + tol * ||H||_F (checked by 2 lambda^2 > ||H||_F^2 or by a Cholesky factor of
/// the shifted matrix). Otherwise a cyclic complex Jacobi eigendecomposition of at most
/// `max_iter` sweeps is used. Returns nullopt if the final residual still exceeds the tolerance.
std::optional<EigenPair> principal_eigenvector(const CMatrix& h, double tol, int max_iter,
                                               const CVector* start = nullptr);

/// Full Hermitian eigendecomposition by cyclic Jacobi rotations. Eigenvalues in descending
/// order; columns of `vectors` are the matching unit eigenvectors.
struct HermitianEigen {
  Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxChannels, 1> values;
  CMatrix vectors;
  bool converged = false;
};
HermitianEigen jacobi_eigen(const CMatrix& h, int max_sweeps);

/// Scales v by a unit phase so that its largest-modulus entry is real and positive.
void fix_phase(CVector& v);

}  // namespace rtfdoa
