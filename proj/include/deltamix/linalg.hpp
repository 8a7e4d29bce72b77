#pragma once

#include "deltamix/matrix.hpp"

namespace deltamix {

// Lower-triangular Cholesky factor l with a = l · lᵀ. Returns false (leaving
// `l` unspecified) when a pivot is not strictly positive.
bool cholesky(const DenseMatrix& a, DenseMatrix& l);

// Inverse of a symmetric positive-definite matrix from its Cholesky factor.
DenseMatrix cholesky_inverse(const DenseMatrix& l);

// Solves (a + eps_rel · (trace(a)/dim) · I) · z = b for symmetric a.
// When trace(a) is zero the shift falls back to eps_rel itself. Throws a
// singular error carrying a pivot-ratio condition estimate on failure.
DenseMatrix ridge_solve(const DenseMatrix& a, const DenseMatrix& b,
                        double eps_rel);

}  // namespace deltamix
