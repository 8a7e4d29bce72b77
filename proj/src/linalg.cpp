#include "deltamix/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "deltamix/error.hpp"

namespace deltamix {

bool cholesky(const DenseMatrix& a, DenseMatrix& l) {
  const std::size_t n = a.rows();
  l = DenseMatrix(n, n);
  double max_diag = 0.0;
  for (std::size_t j = 0; j < n; ++j) max_diag = std::max(max_diag, a(j, j));
  // Pivots at rounding level mean the matrix is numerically singular.
  const double floor =
      max_diag * static_cast<double>(n) * std::numeric_limits<double>::epsilon();
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > floor) || !std::isfinite(d)) return false;
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / ljj;
    }
  }
  return true;
}

DenseMatrix cholesky_inverse(const DenseMatrix& l) {
  const std::size_t n = l.rows();
  // Invert l (lower triangular) column by column, then inv(a) = inv(l)ᵀ inv(l).
  DenseMatrix li(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    li(j, j) = 1.0 / l(j, j);
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = 0.0;
      for (std::size_t k = j; k < i; ++k) s -= l(i, k) * li(k, j);
      li(i, j) = s / l(i, i);
    }
  }
  DenseMatrix inv(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = 0.0;
      for (std::size_t k = i; k < n; ++k) s += li(k, i) * li(k, j);
      inv(i, j) = s;
      inv(j, i) = s;
    }
  }
  return inv;
}

DenseMatrix ridge_solve(const DenseMatrix& a, const DenseMatrix& b,
                        double eps_rel) {
  const std::size_t n = a.rows();
  if (a.cols() != n || b.rows() != n) {
    throw_error(ErrorKind::kShape,
                "ridge_solve: system " + std::to_string(a.rows()) + "x" +
                    std::to_string(a.cols()) + " with right-hand side " +
                    std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
  if (!(eps_rel >= 0.0)) {
    throw_error(ErrorKind::kConfig, "ridge_solve: eps_rel must be >= 0");
  }
  if (n == 0) return DenseMatrix(0, b.cols());

  const double mean_diag = trace(a) / static_cast<double>(n);
  const double shift = mean_diag > 0.0 ? eps_rel * mean_diag : eps_rel;
  DenseMatrix shifted = a;
  for (std::size_t i = 0; i < n; ++i) shifted(i, i) += shift;

  DenseMatrix l;
  if (!cholesky(shifted, l)) {
    double dmax = 0.0;
    double dmin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      dmax = std::max(dmax, std::abs(shifted(i, i)));
      dmin = std::min(dmin, std::abs(shifted(i, i)));
    }
    std::ostringstream msg;
    msg << "ridge_solve: " << n << "x" << n
        << " system is not positive definite after a shift of " << shift
        << " (diagonal ratio estimate "
        << (dmin > 0.0 ? dmax / dmin : std::numeric_limits<double>::infinity())
        << ")";
    if (eps_rel == 0.0) msg << "; consider eps_rel > 0";
    throw_error(ErrorKind::kSingular, msg.str());
  }

  // Forward then back substitution per right-hand-side column.
  DenseMatrix z(n, b.cols());
  std::vector<double> y(n);
  for (std::size_t c = 0; c < b.cols(); ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      double s = b(i, c);
      for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * y[k];
      y[i] = s / l(i, i);
    }
    for (std::size_t i = n; i-- > 0;) {
      double s = y[i];
      for (std::size_t k = i + 1; k < n; ++k) s -= l(k, i) * z(k, c);
      z(i, c) = s / l(i, i);
    }
  }
  return z;
}

}  // namespace deltamix
