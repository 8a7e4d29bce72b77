#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "deltamix/matrix.hpp"

namespace deltamix {

// Raw tensor file "CALX": magic, u16 version, u16 dtype tag, u64 rows (d),
// u64 cols (n), then d·n little-endian values in column-major order. Used for
// calibration activations (samples are columns) and for delta matrices.
inline constexpr std::uint16_t kCalxVersion = 1;

enum class DType : std::uint16_t { kF32 = 1, kF64 = 2 };

std::vector<std::uint8_t> encode_calx(const DenseMatrix& m, DType dtype = DType::kF64);
DenseMatrix decode_calx(std::span<const std::uint8_t> bytes,
                        const std::string& context = "CALX");

void save_matrix(const std::filesystem::path& path, const DenseMatrix& m,
                 DType dtype = DType::kF64);
DenseMatrix load_matrix(const std::filesystem::path& path);

// Loads a d × n activation matrix and checks d against the layer's input
// dimension. Requires at least one sample.
DenseMatrix load_activations(const std::filesystem::path& path,
                             std::size_t expected_dim);

// mt19937_64 with our own uniform and normal transforms: the standard pins the
// engine's raw stream but not the <random> distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform();  // [0, 1)
  double normal();

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

struct Distribution {
  enum class Kind { kGaussian, kHeavyTail, kLowRank };
  Kind kind = Kind::kGaussian;
  double tail_index = 2.0;  // heavy_tail
  std::size_t rank = 1;     // low_rank
};

// "gaussian", "heavy_tail:<alpha>" or "low_rank:<k>".
Distribution parse_distribution(std::string_view spec);

DenseMatrix synth_activations(std::size_t dim, std::size_t n,
                              const Distribution& distribution,
                              std::uint64_t seed);

// h_out × h_in matrix with random orthonormal singular vectors and singular
// values sigma_i = scale · decay^i.
DenseMatrix synth_delta(std::size_t h_out, std::size_t h_in, double decay,
                        std::uint64_t seed, double scale = 1.0);

}  // namespace deltamix
