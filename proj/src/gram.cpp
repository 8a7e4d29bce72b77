#include "deltamix/gram.hpp"

#include <string>

#include "deltamix/error.hpp"

namespace deltamix {

namespace {

double pairwise_dot(const double* a, const double* b, std::size_t n) {
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) s += a[k] * b[k];
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_dot(a, b, half) + pairwise_dot(a + half, b + half, n - half);
}

}  // namespace

void GramMatrix::accumulate(const DenseMatrix& x_batch) {
  if (x_batch.rows() != dim()) {
    throw_error(ErrorKind::kShape,
                "gram accumulation: batch has " +
                    std::to_string(x_batch.rows()) + " rows, expected " +
                    std::to_string(dim()));
  }
  require_finite(x_batch, "calibration batch");
  const std::size_t n = x_batch.cols();
  for (std::size_t i = 0; i < dim(); ++i) {
    const double* xi = x_batch.row(i).data();
    for (std::size_t j = i; j < dim(); ++j) {
      const double v = pairwise_dot(xi, x_batch.row(j).data(), n);
      g_(i, j) += v;
      if (j != i) g_(j, i) = g_(i, j);
    }
  }
  n_samples_ += n;
}

GramMatrix accumulate_gram(GramMatrix acc, const DenseMatrix& x_batch) {
  acc.accumulate(x_batch);
  return acc;
}

GramMatrix gram_of(const DenseMatrix& x) {
  GramMatrix g(x.rows());
  g.accumulate(x);
  return g;
}

}  // namespace deltamix
