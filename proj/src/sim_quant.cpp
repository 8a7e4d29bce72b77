#include <vector>

#include "deltamix/error.hpp"
#include "deltamix/gptq.hpp"
#include "deltamix/quant_grid.hpp"

namespace deltamix {

DenseMatrix sim_quant(const DenseMatrix& v, int bits, const GramMatrix& gram) {
  return sim_quant(v, bits, gram, GptqOptions{});
}

DenseMatrix sim_quant(const DenseMatrix& v, int bits, const GramMatrix& gram,
                      const GptqOptions& options) {
  validate_bits(bits);
  if (v.cols() != gram.dim()) {
    throw_error(ErrorKind::kShape,
                "sim_quant: factor has " + std::to_string(v.cols()) +
                    " columns, gram dim is " + std::to_string(gram.dim()));
  }
  if (bits == 0) return DenseMatrix(v.rows(), v.cols());
  const HessianContext ctx = HessianContext::build(2.0 * gram.g(), options);
  const std::vector<int> row_bits(v.rows(), bits);
  return quantize_matrix_rows(v, ctx, row_bits, Axis::kRow, options.threads)
      .dequantized;
}

}  // namespace deltamix
