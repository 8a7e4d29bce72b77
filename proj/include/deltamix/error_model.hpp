#pragma once

#include <span>
#include <vector>

#include "deltamix/gptq.hpp"
#include "deltamix/gram.hpp"
#include "deltamix/matrix.hpp"

namespace deltamix {

// Per-row, per-candidate-bit quantization error of V. error(i, k) is
// sigma_i² · ΔV_i · g · ΔV_iᵀ for candidate bits[k]; the two factors are kept
// separately as the "scaling" and "difference" terms.
struct ErrorTable {
  std::vector<int> bits;
  std::vector<double> scaling;  // sigma_i², length r
  DenseMatrix difference;       // r × bits.size()
  DenseMatrix error;            // r × bits.size()

  std::size_t rows() const noexcept { return scaling.size(); }
  // Column index of `bit`; throws a lookup error if it is not a candidate.
  std::size_t column_of(int bit) const;
};

// One column of the table: sigma_i² · ΔV_i · g · ΔV_iᵀ with ΔV = v − v_hat.
std::vector<double> calc_loss(const DenseMatrix& v, const DenseMatrix& v_hat,
                              std::span<const double> sigma,
                              const GramMatrix& gram);

struct ErrorModelOptions {
  GptqOptions gptq;
  int threads = 1;
};

// Simulates every candidate bit (bit 0 analytically) and assembles the table.
// `bits` must be nonempty, strictly ascending.
ErrorTable build_error_table(const DenseMatrix& v, std::span<const double> sigma,
                             const GramMatrix& gram, std::span<const int> bits,
                             const ErrorModelOptions& options = {});

struct Decomposition {
  double scaling = 0.0;
  double difference = 0.0;
};

Decomposition decompose(const ErrorTable& table, std::size_t row, int bit);

// ‖(w_ref − w_hat)·X‖²_F evaluated through the Gram matrix g = X·Xᵀ.
double output_error(const DenseMatrix& w_ref, const DenseMatrix& w_hat,
                    const GramMatrix& gram);

}  // namespace deltamix
