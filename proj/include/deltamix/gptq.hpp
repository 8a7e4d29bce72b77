#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "deltamix/matrix.hpp"
#include "deltamix/quant_grid.hpp"

namespace deltamix {

struct GptqOptions {
  double damp_rel = 0.01;
  // Damping is multiplied by 10 on each failed factorization.
  int max_damp_retries = 3;
  int threads = 1;
};

// Hessian shared by every row of a factor, with the upper Cholesky factor of
// its damped inverse computed once.
class HessianContext {
 public:
  // h must be symmetric PSD. Damping of damp_rel · mean(diag(h)) is added
  // before factorizing (damp_rel alone when the diagonal is all zero).
  static HessianContext build(DenseMatrix h, const GptqOptions& options = {});

  std::size_t dim() const noexcept { return h_.rows(); }
  const DenseMatrix& h() const noexcept { return h_; }
  // Absolute damping added to the diagonal, after any escalation.
  double damp() const noexcept { return damp_; }
  double damp_rel_used() const noexcept { return damp_rel_used_; }
  int escalations() const noexcept { return escalations_; }
  // u with (h + damp·I)⁻¹ = uᵀ·u.
  const DenseMatrix& inv_upper() const noexcept { return inv_upper_; }

 private:
  DenseMatrix h_;
  DenseMatrix inv_upper_;
  double damp_ = 0.0;
  double damp_rel_used_ = 0.0;
  int escalations_ = 0;
};

// A row's grids, one per active bit class, ascending by bits.
using RowGrids = std::vector<GridParams>;

const GridParams* find_grid(const RowGrids& grids, int bits);

struct RowQuantization {
  std::vector<std::uint32_t> codes;  // 0 where the column's bit is 0
  std::vector<double> dequantized;
  double error = 0.0;  // ½ · Δ · h · Δᵀ with the undamped h
};

// Quantizes columns left to right, each on the grid of its bit class, pushing
// the rounding residual onto later columns through the inverse-Hessian factor.
RowQuantization quantize_row(std::span<const double> row,
                             const HessianContext& ctx,
                             std::span<const int> col_bits,
                             const RowGrids& grids);

enum class Axis {
  kRow,     // one bit per matrix row (factor V)
  kColumn,  // one bit per matrix column, shared by all rows (factor U)
};

struct QuantizedFactor {
  Axis axis = Axis::kRow;
  std::vector<int> bits;  // per row (kRow) or per column (kColumn)
  std::vector<RowGrids> grids;  // per matrix row
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint32_t> codes;  // rows × cols, row-major
  DenseMatrix dequantized;
  std::vector<double> row_errors;
  double total_error = 0.0;

  std::vector<int> col_bits_of_row(std::size_t i) const;
};

// Bit classes present in `bits`, ascending, excluding 0.
std::vector<int> active_classes(std::span<const int> bits);

// Grids for one row: per active class, fit over that row's entries in the class.
RowGrids fit_row_grids(std::span<const double> row, std::span<const int> col_bits);

QuantizedFactor quantize_matrix_rows(const DenseMatrix& m,
                                     const HessianContext& ctx,
                                     std::span<const int> bits, Axis axis,
                                     int threads = 1);

}  // namespace deltamix
