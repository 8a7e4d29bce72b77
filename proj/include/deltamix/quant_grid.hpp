#pragma once

#include <cstdint>
#include <span>

#include "deltamix/gram.hpp"
#include "deltamix/matrix.hpp"

namespace deltamix {

inline constexpr int kMaxBits = 16;

// Asymmetric uniform grid: value = scale · (code − zero_point), codes in
// [0, 2^bits − 1]. bits == 0 is the dropped grid whose only value is 0.
struct GridParams {
  int bits = 0;
  double scale = 1.0;
  std::int32_t zero_point = 0;

  std::uint32_t max_code() const noexcept {
    return bits == 0 ? 0u : (1u << bits) - 1u;
  }
  bool operator==(const GridParams&) const = default;
};

// Throws an unsupported-bits error unless bits is 0 or in [2, kMaxBits].
void validate_bits(int bits);

// Min-max grid over the row with the range widened to include zero. The scale
// is rounded to single precision so a stored grid reproduces exactly.
GridParams fit_grid(std::span<const double> row, int bits);

// Round-half-away-from-zero onto the grid, clamped to the code range.
std::uint32_t quantize_value(double x, const GridParams& grid);
double dequantize_code(std::uint32_t code, const GridParams& grid);

struct GptqOptions;

// Quantizes every row of v at `bits` with error-compensated rounding under the
// shared Hessian 2·gram. bits == 0 returns the zero matrix without a solve.
DenseMatrix sim_quant(const DenseMatrix& v, int bits, const GramMatrix& gram);
DenseMatrix sim_quant(const DenseMatrix& v, int bits, const GramMatrix& gram,
                      const GptqOptions& options);

}  // namespace deltamix
