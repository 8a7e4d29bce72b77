#pragma once

#include <cstddef>

#include "deltamix/matrix.hpp"

namespace deltamix {

// Streaming accumulation of X·Xᵀ over calibration batches. Each batch holds
// samples as columns (dim × n).
class GramMatrix {
 public:
  explicit GramMatrix(std::size_t dim) : g_(dim, dim) {}

  // Sums the products inside the batch pairwise, then adds the batch to the
  // running total, so results depend only on the batch sequence.
  void accumulate(const DenseMatrix& x_batch);

  std::size_t dim() const noexcept { return g_.rows(); }
  std::size_t n_samples() const noexcept { return n_samples_; }
  const DenseMatrix& g() const noexcept { return g_; }

 private:
  DenseMatrix g_;
  std::size_t n_samples_ = 0;
};

GramMatrix accumulate_gram(GramMatrix acc, const DenseMatrix& x_batch);
GramMatrix gram_of(const DenseMatrix& x);

}  // namespace deltamix
