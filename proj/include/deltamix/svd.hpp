#pragma once

#include <vector>

#include "deltamix/matrix.hpp"

namespace deltamix {

// Thin SVD w = u · diag(sigma) · v with u (h_out × r), v (r × h_in) and
// r = min(h_out, h_in). Rows of v are right singular vectors.
struct SvdFactors {
  DenseMatrix u;
  std::vector<double> sigma;  // descending, nonnegative
  DenseMatrix v;

  std::size_t rank() const noexcept { return sigma.size(); }
  DenseMatrix reconstruct() const;
};

struct SvdOptions {
  int max_sweeps = 100;
  // Sweeps stop once every pairwise rotation sine falls below this.
  double tolerance = 1e-12;
};

// One-sided (Hestenes) Jacobi SVD. The largest-magnitude entry of every column
// of u is made nonnegative so factorizations are deterministic. Singular
// vectors for a zero singular value are completed to an orthonormal set.
SvdFactors svd(const DenseMatrix& w, const SvdOptions& options = {});

}  // namespace deltamix
