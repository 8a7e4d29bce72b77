#include "deltamix/svd.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "deltamix/error.hpp"

namespace deltamix {

namespace {

// Column-major working storage: columns are contiguous, which is what the
// pairwise rotations touch.
struct Columns {
  std::size_t length = 0;
  std::vector<std::vector<double>> cols;
};

Columns columns_of(const DenseMatrix& a) {
  Columns c{a.rows(), std::vector<std::vector<double>>(a.cols())};
  for (std::size_t j = 0; j < a.cols(); ++j) c.cols[j] = a.col(j);
  return c;
}

void rotate(std::vector<double>& x, std::vector<double>& y, double c,
            double s) {
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double xk = x[k];
    const double yk = y[k];
    x[k] = c * xk - s * yk;
    y[k] = s * xk + c * yk;
  }
}

double sq_norm(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

// Orthogonalizes the columns of `a` in place; `j` accumulates the rotations.
// Returns false if the sweep cap is hit before convergence.
bool jacobi_sweeps(Columns& a, Columns& j, const SvdOptions& options) {
  const std::size_t n = a.cols.size();
  for (int sweep = 0; sweep < options.max_sweeps; ++sweep) {
    double max_sine = 0.0;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double alpha = sq_norm(a.cols[p]);
        const double beta = sq_norm(a.cols[q]);
        if (alpha == 0.0 || beta == 0.0) continue;
        double gamma = 0.0;
        for (std::size_t k = 0; k < a.length; ++k)
          gamma += a.cols[p][k] * a.cols[q][k];
        const double off = std::abs(gamma) / std::sqrt(alpha * beta);
        max_sine = std::max(max_sine, off);
        if (off < options.tolerance) continue;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) /
                         (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        rotate(a.cols[p], a.cols[q], c, s);
        rotate(j.cols[p], j.cols[q], c, s);
      }
    }
    if (max_sine < options.tolerance) return true;
  }
  return false;
}

// Fills the columns listed in `missing` with unit vectors orthogonal to all
// other columns (modified Gram-Schmidt against the standard basis).
void complete_basis(Columns& basis, const std::vector<std::size_t>& missing) {
  if (missing.empty()) return;
  std::vector<bool> is_missing(basis.cols.size(), false);
  for (std::size_t m : missing) is_missing[m] = true;
  std::vector<std::size_t> done;
  for (std::size_t k = 0; k < basis.cols.size(); ++k)
    if (!is_missing[k]) done.push_back(k);

  std::size_t next_unit = 0;
  for (std::size_t m : missing) {
    while (next_unit < basis.length) {
      std::vector<double> cand(basis.length, 0.0);
      cand[next_unit++] = 1.0;
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t k : done) {
          const auto& b = basis.cols[k];
          double proj = 0.0;
          for (std::size_t i = 0; i < cand.size(); ++i) proj += b[i] * cand[i];
          for (std::size_t i = 0; i < cand.size(); ++i) cand[i] -= proj * b[i];
        }
      }
      const double norm = std::sqrt(sq_norm(cand));
      if (norm > 1e-6) {
        for (double& v : cand) v /= norm;
        basis.cols[m] = std::move(cand);
        done.push_back(m);
        break;
      }
    }
  }
}

}  // namespace

DenseMatrix SvdFactors::reconstruct() const {
  return matmul(scale_cols(u, sigma), v);
}

SvdFactors svd(const DenseMatrix& w, const SvdOptions& options) {
  if (w.rows() == 0 || w.cols() == 0) {
    throw_error(ErrorKind::kShape, "svd of an empty matrix");
  }
  require_finite(w, "svd input");

  // Orthogonalize columns of the taller orientation so r = min(rows, cols).
  const bool transpose = w.rows() < w.cols();
  const DenseMatrix a_in = transpose ? w.transposed() : w;
  const std::size_t r = a_in.cols();

  Columns a = columns_of(a_in);
  Columns rot = columns_of(DenseMatrix::identity(r));
  if (!jacobi_sweeps(a, rot, options)) {
    throw_error(ErrorKind::kFactorization,
                "svd did not converge within " +
                    std::to_string(options.max_sweeps) + " sweeps for " +
                    std::to_string(w.rows()) + "x" + std::to_string(w.cols()) +
                    " matrix");
  }

  std::vector<double> norms(r);
  double largest = 0.0;
  for (std::size_t k = 0; k < r; ++k) {
    norms[k] = std::sqrt(sq_norm(a.cols[k]));
    largest = std::max(largest, norms[k]);
  }
  std::vector<std::size_t> order(r);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return norms[x] > norms[y];
  });

  // Columns whose norm is at rounding level carry no direction; treat them as
  // exact zeros and rebuild an orthonormal vector for them.
  const double negligible =
      largest *
      std::max(1e-13, static_cast<double>(std::max(a.length, r)) * 1e-15);
  Columns left{a.length, std::vector<std::vector<double>>(r)};
  Columns right{r, std::vector<std::vector<double>>(r)};
  std::vector<double> sigma(r);
  std::vector<std::size_t> missing;
  for (std::size_t k = 0; k < r; ++k) {
    const std::size_t src = order[k];
    right.cols[k] = rot.cols[src];
    if (norms[src] <= negligible) {
      sigma[k] = 0.0;
      left.cols[k].assign(a.length, 0.0);
      missing.push_back(k);
    } else {
      sigma[k] = norms[src];
      left.cols[k] = a.cols[src];
      for (double& v : left.cols[k]) v /= norms[src];
    }
  }
  complete_basis(left, missing);

  // In the transposed case the roles swap: w = right · Σ · leftᵀ.
  const Columns& u_cols = transpose ? right : left;
  const Columns& v_cols = transpose ? left : right;

  SvdFactors out;
  out.sigma = std::move(sigma);
  out.u = DenseMatrix(w.rows(), r);
  out.v = DenseMatrix(r, w.cols());
  for (std::size_t k = 0; k < r; ++k) {
    const auto& uc = u_cols.cols[k];
    std::size_t arg = 0;
    for (std::size_t i = 1; i < uc.size(); ++i)
      if (std::abs(uc[i]) > std::abs(uc[arg])) arg = i;
    const double sign = uc[arg] < 0.0 ? -1.0 : 1.0;
    for (std::size_t i = 0; i < w.rows(); ++i) out.u(i, k) = sign * uc[i];
    for (std::size_t i = 0; i < w.cols(); ++i)
      out.v(k, i) = sign * v_cols.cols[k][i];
  }
  return out;
}

}  // namespace deltamix
