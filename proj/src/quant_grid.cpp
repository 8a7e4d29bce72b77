#include "deltamix/quant_grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "deltamix/error.hpp"

namespace deltamix {

void validate_bits(int bits) {
  if (bits == 0 || (bits >= 2 && bits <= kMaxBits)) return;
  throw_error(ErrorKind::kUnsupportedBits,
              "unsupported bit-width " + std::to_string(bits) +
                  " (allowed: 0 or 2.." + std::to_string(kMaxBits) + ")");
}

GridParams fit_grid(std::span<const double> row, int bits) {
  validate_bits(bits);
  GridParams grid;
  grid.bits = bits;
  if (bits == 0) return grid;

  double lo = 0.0;
  double hi = 0.0;
  for (double x : row) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  if (hi == lo) return grid;  // all-zero row: scale 1, zero point 0

  const double levels = static_cast<double>(grid.max_code());
  const double raw = (hi - lo) / levels;
  grid.scale = static_cast<double>(static_cast<float>(raw));
  // Zero point from the unrounded step: float rounding of e.g. 2/3 would
  // otherwise push -lo/scale just under a .5 boundary.
  const double zp = std::round(-lo / raw);
  grid.zero_point = static_cast<std::int32_t>(std::clamp(zp, 0.0, levels));
  return grid;
}

std::uint32_t quantize_value(double x, const GridParams& grid) {
  if (grid.bits == 0) return 0;
  const double q = std::round(x / grid.scale) + grid.zero_point;
  return static_cast<std::uint32_t>(
      std::clamp(q, 0.0, static_cast<double>(grid.max_code())));
}

double dequantize_code(std::uint32_t code, const GridParams& grid) {
  if (grid.bits == 0) return 0.0;
  return grid.scale * (static_cast<double>(code) - grid.zero_point);
}

}  // namespace deltamix
