#include "deltamix/calib_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>

#include "deltamix/bytes.hpp"
#include "deltamix/error.hpp"

namespace deltamix {

namespace {

constexpr char kMagic[] = "CALX";

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

// Random matrix with orthonormal columns (modified Gram-Schmidt, two passes).
DenseMatrix orthonormal_columns(std::size_t n, std::size_t k, Rng& rng) {
  std::vector<std::vector<double>> cols;
  while (cols.size() < k) {
    std::vector<double> c(n);
    for (double& x : c) x = rng.normal();
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& q : cols) {
        double p = 0.0;
        for (std::size_t i = 0; i < n; ++i) p += q[i] * c[i];
        for (std::size_t i = 0; i < n; ++i) c[i] -= p * q[i];
      }
    }
    double norm = 0.0;
    for (double x : c) norm += x * x;
    norm = std::sqrt(norm);
    if (norm < 1e-8) continue;
    for (double& x : c) x /= norm;
    cols.push_back(std::move(c));
  }
  DenseMatrix m(n, k);
  for (std::size_t j = 0; j < k; ++j)
    for (std::size_t i = 0; i < n; ++i) m(i, j) = cols[j][i];
  return m;
}

}  // namespace

std::vector<std::uint8_t> encode_calx(const DenseMatrix& m, DType dtype) {
  ByteWriter w;
  w.text(std::string_view(kMagic, 4));
  w.u16(kCalxVersion);
  w.u16(static_cast<std::uint16_t>(dtype));
  w.u64(m.rows());
  w.u64(m.cols());
  for (std::size_t j = 0; j < m.cols(); ++j) {
    for (std::size_t i = 0; i < m.rows(); ++i) {
      if (dtype == DType::kF32) {
        w.f32(static_cast<float>(m(i, j)));
      } else {
        w.f64(m(i, j));
      }
    }
  }
  return w.take();
}

DenseMatrix decode_calx(std::span<const std::uint8_t> bytes,
                        const std::string& context) {
  ByteReader r(bytes, context);
  if (r.text(4) != std::string_view(kMagic, 4)) {
    throw_error(ErrorKind::kCorruption, context + ": bad magic (expected CALX)");
  }
  const std::uint16_t version = r.u16();
  if (version != kCalxVersion) {
    throw_error(ErrorKind::kCorruption,
                context + ": unsupported version " + std::to_string(version));
  }
  const std::uint16_t tag = r.u16();
  if (tag != static_cast<std::uint16_t>(DType::kF32) &&
      tag != static_cast<std::uint16_t>(DType::kF64)) {
    throw_error(ErrorKind::kCorruption,
                context + ": unknown dtype tag " + std::to_string(tag));
  }
  const std::uint64_t d = r.u64();
  const std::uint64_t n = r.u64();
  const std::size_t width = tag == static_cast<std::uint16_t>(DType::kF32) ? 4 : 8;
  if (d == 0 || n == 0) {
    throw_error(ErrorKind::kShape, context + ": empty tensor (" +
                                       std::to_string(d) + "x" +
                                       std::to_string(n) +
                                       "); at least 1 sample required");
  }
  if (d > r.remaining() / width / n || d * n * width != r.remaining()) {
    throw_error(ErrorKind::kCorruption,
                context + ": payload is " + std::to_string(r.remaining()) +
                    " bytes, header declares " + std::to_string(d) + "x" +
                    std::to_string(n));
  }
  DenseMatrix m(d, n);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < d; ++i) {
      m(i, j) = width == 4 ? static_cast<double>(r.f32()) : r.f64();
    }
  }
  require_finite(m, context);
  return m;
}

void save_matrix(const std::filesystem::path& path, const DenseMatrix& m,
                 DType dtype) {
  write_file(path, encode_calx(m, dtype));
}

DenseMatrix load_matrix(const std::filesystem::path& path) {
  return decode_calx(read_file(path), path.string());
}

DenseMatrix load_activations(const std::filesystem::path& path,
                             std::size_t expected_dim) {
  DenseMatrix x = load_matrix(path);
  if (x.rows() != expected_dim) {
    throw_error(ErrorKind::kShape,
                path.string() + ": activation dim " + std::to_string(x.rows()) +
                    " does not match expected " + std::to_string(expected_dim));
  }
  return x;
}

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

Distribution parse_distribution(std::string_view spec) {
  const std::string s = trim(spec);
  const auto colon = s.find(':');
  const std::string name = s.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : trim(s.substr(colon + 1));
  Distribution d;
  if (name == "gaussian") {
    if (!arg.empty()) {
      throw_error(ErrorKind::kConfig, "gaussian takes no parameter");
    }
    d.kind = Distribution::Kind::kGaussian;
    return d;
  }
  if (name == "heavy_tail") {
    d.kind = Distribution::Kind::kHeavyTail;
    char* end = nullptr;
    d.tail_index = arg.empty() ? 2.0 : std::strtod(arg.c_str(), &end);
    if ((!arg.empty() && *end != '\0') || !(d.tail_index > 0.0) ||
        !std::isfinite(d.tail_index)) {
      throw_error(ErrorKind::kConfig,
                  "heavy_tail needs a positive tail index, got '" + arg + "'");
    }
    return d;
  }
  if (name == "low_rank") {
    d.kind = Distribution::Kind::kLowRank;
    std::size_t k = 0;
    const auto [ptr, ec] = std::from_chars(arg.data(), arg.data() + arg.size(), k);
    if (ec != std::errc() || ptr != arg.data() + arg.size() || k == 0) {
      throw_error(ErrorKind::kConfig,
                  "low_rank needs a positive integer rank, got '" + arg + "'");
    }
    d.rank = k;
    return d;
  }
  throw_error(ErrorKind::kConfig, "unknown distribution '" + s + "'");
}

DenseMatrix synth_activations(std::size_t dim, std::size_t n,
                              const Distribution& distribution,
                              std::uint64_t seed) {
  if (dim == 0 || n == 0) {
    throw_error(ErrorKind::kConfig, "synthetic activations need dim, n >= 1");
  }
  Rng rng(seed);
  switch (distribution.kind) {
    case Distribution::Kind::kGaussian: {
      DenseMatrix x(dim, n);
      for (double& v : x.data()) v = rng.normal();
      return x;
    }
    case Distribution::Kind::kHeavyTail: {
      if (!(distribution.tail_index > 0.0)) {
        throw_error(ErrorKind::kConfig, "heavy_tail index must be positive");
      }
      // Symmetric Pareto-type draw: P(|x| > t) decays like t^-alpha.
      DenseMatrix x(dim, n);
      for (double& v : x.data()) {
        double u = rng.uniform();
        while (u <= 0.0) u = rng.uniform();
        const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
        v = sign * (std::pow(u, -1.0 / distribution.tail_index) - 1.0);
      }
      return x;
    }
    case Distribution::Kind::kLowRank: {
      const std::size_t k = distribution.rank;
      if (k == 0) throw_error(ErrorKind::kConfig, "low_rank rank must be >= 1");
      DenseMatrix a(dim, k);
      DenseMatrix b(k, n);
      for (double& v : a.data()) v = rng.normal();
      for (double& v : b.data()) v = rng.normal();
      return (1.0 / std::sqrt(static_cast<double>(k))) * matmul(a, b);
    }
  }
  throw_error(ErrorKind::kConfig, "unknown distribution");
}

DenseMatrix synth_delta(std::size_t h_out, std::size_t h_in, double decay,
                        std::uint64_t seed, double scale) {
  if (h_out == 0 || h_in == 0) {
    throw_error(ErrorKind::kConfig, "synthetic delta needs nonzero dims");
  }
  Rng rng(seed);
  const std::size_t r = std::min(h_out, h_in);
  const DenseMatrix left = orthonormal_columns(h_out, r, rng);
  const DenseMatrix right = orthonormal_columns(h_in, r, rng);
  std::vector<double> sigma(r);
  for (std::size_t i = 0; i < r; ++i)
    sigma[i] = scale * std::pow(decay, static_cast<double>(i));
  return matmul_nt(scale_cols(left, sigma), right);
}

}  // namespace deltamix
