#pragma once

#include "kcs/matrix.hpp"

namespace kcs {

struct SvdResult {
  Matrix u;  // m x k, orthonormal columns, k = min(m, n)
  Vector s;  // singular values, descending, nonnegative
  Matrix v;  // n x k, orthonormal columns
};

// Golub-Kahan SVD: Householder bidiagonalization followed by implicit-shift
// QR on the bidiagonal. Throws NumericFailure if a singular value fails to
// converge.
SvdResult svd(const Matrix& a);

// Moore-Penrose pseudoinverse. Singular values at or below rtol * s_max are
// treated as zero; rtol < 0 selects machine epsilon times max(rows, cols).
Matrix pinv(const Matrix& a, double rtol = -1.0);

struct SymEigResult {
  Vector values;   // descending
  Matrix vectors;  // orthonormal columns, same order as values
};

// Eigendecomposition of a symmetric matrix (tridiagonalization + QL).
SymEigResult sym_eig(const Matrix& a);

struct PivotedCholesky {
  std::vector<std::size_t> pivots;  // selected indices, in pivot order
  std::size_t rank = 0;
  Matrix factor;  // rank x n; factor^T factor reproduces the input within tol
};

// Diagonally pivoted Cholesky of a PSD matrix. Stops once the largest
// residual diagonal is at or below tol (absolute). A residual diagonal below
// -tol means the input was not PSD and raises ContractViolation.
PivotedCholesky pivoted_cholesky(const Matrix& g, double tol);

// Upper Cholesky factor R with A = R^T R; NumericFailure on a nonpositive
// pivot.
Matrix cholesky_upper(const Matrix& a);
Vector cholesky_solve(const Matrix& r, Vector b);

// Symmetric inverse square root via the eigendecomposition. Any eigenvalue
// at or below zero raises DegenerateCovariance.
Matrix spd_inv_sqrt(const Matrix& a);

}  // namespace kcs
