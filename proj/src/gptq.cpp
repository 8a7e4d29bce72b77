#include "deltamix/gptq.hpp"

#include <algorithm>
#include <sstream>

#include "deltamix/error.hpp"
#include "deltamix/linalg.hpp"
#include "deltamix/parallel.hpp"

namespace deltamix {

HessianContext HessianContext::build(DenseMatrix h, const GptqOptions& options) {
  const std::size_t n = h.rows();
  if (h.cols() != n) {
    throw_error(ErrorKind::kShape, "hessian must be square, got " +
                                       std::to_string(h.rows()) + "x" +
                                       std::to_string(h.cols()));
  }
  require_finite(h, "hessian");
  const double mean_diag = n == 0 ? 0.0 : trace(h) / static_cast<double>(n);
  const double base = mean_diag > 0.0 ? mean_diag : 1.0;

  HessianContext ctx;
  double damp_rel = options.damp_rel;
  for (int attempt = 0; attempt <= options.max_damp_retries; ++attempt) {
    const double damp = damp_rel * base;
    DenseMatrix damped = h;
    for (std::size_t i = 0; i < n; ++i) damped(i, i) += damp;
    DenseMatrix l;
    DenseMatrix l_inv;
    if (cholesky(damped, l) && cholesky(cholesky_inverse(l), l_inv)) {
      ctx.h_ = std::move(h);
      ctx.inv_upper_ = l_inv.transposed();
      ctx.damp_ = damp;
      ctx.damp_rel_used_ = damp_rel;
      ctx.escalations_ = attempt;
      return ctx;
    }
    damp_rel *= 10.0;
  }
  std::ostringstream msg;
  msg << "hessian (" << n << "x" << n
      << ") failed to factorize after damping escalation to damp_rel="
      << damp_rel / 10.0;
  throw_error(ErrorKind::kIllConditioned, msg.str());
}

const GridParams* find_grid(const RowGrids& grids, int bits) {
  for (const auto& g : grids)
    if (g.bits == bits) return &g;
  return nullptr;
}

RowQuantization quantize_row(std::span<const double> row,
                             const HessianContext& ctx,
                             std::span<const int> col_bits,
                             const RowGrids& grids) {
  const std::size_t d = ctx.dim();
  if (row.size() != d || col_bits.size() != d) {
    throw_error(ErrorKind::kShape,
                "quantize_row: row length " + std::to_string(row.size()) +
                    ", bits length " + std::to_string(col_bits.size()) +
                    ", hessian dim " + std::to_string(d));
  }
  std::vector<const GridParams*> col_grid(d, nullptr);
  for (std::size_t j = 0; j < d; ++j) {
    validate_bits(col_bits[j]);
    if (col_bits[j] == 0) continue;
    col_grid[j] = find_grid(grids, col_bits[j]);
    if (col_grid[j] == nullptr) {
      throw_error(ErrorKind::kConfig, "quantize_row: no grid for bit class " +
                                          std::to_string(col_bits[j]));
    }
  }

  const DenseMatrix& u = ctx.inv_upper();
  RowQuantization out;
  out.codes.assign(d, 0);
  out.dequantized.assign(d, 0.0);
  std::vector<double> w(row.begin(), row.end());
  for (std::size_t j = 0; j < d; ++j) {
    double q = 0.0;
    if (col_grid[j] != nullptr) {
      out.codes[j] = quantize_value(w[j], *col_grid[j]);
      q = dequantize_code(out.codes[j], *col_grid[j]);
    }
    out.dequantized[j] = q;
    const double err = (w[j] - q) / u(j, j);
    if (err == 0.0) continue;
    auto uj = u.row(j);
    for (std::size_t k = j + 1; k < d; ++k) w[k] -= err * uj[k];
  }

  std::vector<double> delta(d);
  for (std::size_t j = 0; j < d; ++j) delta[j] = row[j] - out.dequantized[j];
  out.error = 0.5 * quadratic_form(delta, ctx.h());
  return out;
}

std::vector<int> QuantizedFactor::col_bits_of_row(std::size_t i) const {
  if (axis == Axis::kColumn) return bits;
  return std::vector<int>(cols, bits[i]);
}

std::vector<int> active_classes(std::span<const int> bits) {
  std::vector<int> classes;
  for (int b : bits)
    if (b != 0) classes.push_back(b);
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  return classes;
}

RowGrids fit_row_grids(std::span<const double> row,
                       std::span<const int> col_bits) {
  RowGrids grids;
  std::vector<double> members;
  for (int c : active_classes(col_bits)) {
    members.clear();
    for (std::size_t j = 0; j < row.size(); ++j)
      if (col_bits[j] == c) members.push_back(row[j]);
    grids.push_back(fit_grid(members, c));
  }
  return grids;
}

QuantizedFactor quantize_matrix_rows(const DenseMatrix& m,
                                     const HessianContext& ctx,
                                     std::span<const int> bits, Axis axis,
                                     int threads) {
  const std::size_t expected = axis == Axis::kRow ? m.rows() : m.cols();
  if (bits.size() != expected) {
    throw_error(ErrorKind::kShape,
                "quantize_matrix_rows: scheme length " +
                    std::to_string(bits.size()) + " for " +
                    std::string(axis == Axis::kRow ? "rows" : "columns") +
                    " of " + std::to_string(m.rows()) + "x" +
                    std::to_string(m.cols()) + " matrix");
  }
  for (int b : bits) validate_bits(b);

  QuantizedFactor f;
  f.axis = axis;
  f.bits.assign(bits.begin(), bits.end());
  f.rows = m.rows();
  f.cols = m.cols();
  f.grids.resize(m.rows());
  f.codes.assign(m.rows() * m.cols(), 0);
  f.dequantized = DenseMatrix(m.rows(), m.cols());
  f.row_errors.assign(m.rows(), 0.0);

  parallel_for(m.rows(), threads, [&](std::size_t i) {
    const std::vector<int> col_bits = f.col_bits_of_row(i);
    f.grids[i] = fit_row_grids(m.row(i), col_bits);
    RowQuantization rq = quantize_row(m.row(i), ctx, col_bits, f.grids[i]);
    std::copy(rq.codes.begin(), rq.codes.end(), f.codes.begin() + i * f.cols);
    std::copy(rq.dequantized.begin(), rq.dequantized.end(),
              f.dequantized.row(i).begin());
    f.row_errors[i] = rq.error;
  });
  for (double e : f.row_errors) f.total_error += e;
  return f;
}

}  // namespace deltamix
