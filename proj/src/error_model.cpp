#include "deltamix/error_model.hpp"

#include <string>

#include "deltamix/error.hpp"
#include "deltamix/parallel.hpp"

namespace deltamix {

namespace {

std::vector<double> difference_column(const DenseMatrix& v,
                                      const DenseMatrix& v_hat,
                                      const GramMatrix& gram) {
  std::vector<double> out(v.rows());
  std::vector<double> delta(v.cols());
  for (std::size_t i = 0; i < v.rows(); ++i) {
    for (std::size_t j = 0; j < v.cols(); ++j) delta[j] = v(i, j) - v_hat(i, j);
    out[i] = quadratic_form(delta, gram.g());
  }
  return out;
}

void check_shapes(const DenseMatrix& v, std::span<const double> sigma,
                  const GramMatrix& gram) {
  if (sigma.size() != v.rows()) {
    throw_error(ErrorKind::kShape, "error model: " +
                                       std::to_string(sigma.size()) +
                                       " singular values for " +
                                       std::to_string(v.rows()) + " rows of V");
  }
  if (v.cols() != gram.dim()) {
    throw_error(ErrorKind::kShape, "error model: V has " +
                                       std::to_string(v.cols()) +
                                       " columns, gram dim is " +
                                       std::to_string(gram.dim()));
  }
}

}  // namespace

std::size_t ErrorTable::column_of(int bit) const {
  for (std::size_t k = 0; k < bits.size(); ++k)
    if (bits[k] == bit) return k;
  throw_error(ErrorKind::kLookup,
              "bit " + std::to_string(bit) + " is not a candidate");
}

std::vector<double> calc_loss(const DenseMatrix& v, const DenseMatrix& v_hat,
                              std::span<const double> sigma,
                              const GramMatrix& gram) {
  require_same_shape(v, v_hat, "calc_loss");
  check_shapes(v, sigma, gram);
  std::vector<double> e = difference_column(v, v_hat, gram);
  for (std::size_t i = 0; i < e.size(); ++i) e[i] *= sigma[i] * sigma[i];
  return e;
}

ErrorTable build_error_table(const DenseMatrix& v, std::span<const double> sigma,
                             const GramMatrix& gram, std::span<const int> bits,
                             const ErrorModelOptions& options) {
  check_shapes(v, sigma, gram);
  if (bits.empty()) {
    throw_error(ErrorKind::kConfig, "candidate bit list is empty");
  }
  for (std::size_t k = 0; k < bits.size(); ++k) {
    validate_bits(bits[k]);
    if (k > 0 && bits[k] <= bits[k - 1]) {
      throw_error(ErrorKind::kConfig,
                  "candidate bits must be strictly ascending");
    }
  }

  const std::size_t r = v.rows();
  ErrorTable table;
  table.bits.assign(bits.begin(), bits.end());
  table.scaling.resize(r);
  for (std::size_t i = 0; i < r; ++i) table.scaling[i] = sigma[i] * sigma[i];
  table.difference = DenseMatrix(r, bits.size());
  table.error = DenseMatrix(r, bits.size());

  // One Hessian factorization serves every nonzero candidate.
  const bool any_nonzero = bits.back() != 0;
  HessianContext ctx;
  if (any_nonzero) ctx = HessianContext::build(2.0 * gram.g(), options.gptq);

  std::vector<std::vector<double>> columns(bits.size());
  parallel_for(bits.size(), options.threads, [&](std::size_t k) {
    if (bits[k] == 0) {
      columns[k] = difference_column(v, DenseMatrix(r, v.cols()), gram);
      return;
    }
    const std::vector<int> row_bits(r, bits[k]);
    const DenseMatrix v_hat =
        quantize_matrix_rows(v, ctx, row_bits, Axis::kRow).dequantized;
    columns[k] = difference_column(v, v_hat, gram);
  });

  for (std::size_t k = 0; k < bits.size(); ++k) {
    for (std::size_t i = 0; i < r; ++i) {
      table.difference(i, k) = columns[k][i];
      table.error(i, k) = table.scaling[i] * columns[k][i];
    }
  }
  return table;
}

Decomposition decompose(const ErrorTable& table, std::size_t row, int bit) {
  if (row >= table.rows()) {
    throw_error(ErrorKind::kLookup, "row " + std::to_string(row) +
                                        " out of range for " +
                                        std::to_string(table.rows()) + " rows");
  }
  const std::size_t k = table.column_of(bit);
  return {table.scaling[row], table.difference(row, k)};
}

double output_error(const DenseMatrix& w_ref, const DenseMatrix& w_hat,
                    const GramMatrix& gram) {
  require_same_shape(w_ref, w_hat, "output_error");
  if (w_ref.cols() != gram.dim()) {
    throw_error(ErrorKind::kShape, "output_error: matrix has " +
                                       std::to_string(w_ref.cols()) +
                                       " columns, gram dim is " +
                                       std::to_string(gram.dim()));
  }
  const DenseMatrix diff = w_ref - w_hat;
  double total = 0.0;
  for (std::size_t i = 0; i < diff.rows(); ++i)
    total += quadratic_form(diff.row(i), gram.g());
  return total;
}

}  // namespace deltamix
