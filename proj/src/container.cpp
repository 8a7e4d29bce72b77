#include "deltamix/container.hpp"

#include <zlib.h>

#include <algorithm>
#include <string>

#include "deltamix/bytes.hpp"
#include "deltamix/error.hpp"

namespace deltamix {

namespace {

constexpr char kMagic[] = "DMIX";

// MSB-first bit stream over a byte buffer; each row is flushed to a byte
// boundary.
class BitPacker {
 public:
  explicit BitPacker(std::vector<std::uint8_t>& out) : out_(out) {}

  void put(std::uint32_t code, int bits) {
    for (int b = bits - 1; b >= 0; --b) {
      acc_ = static_cast<std::uint8_t>((acc_ << 1) | ((code >> b) & 1u));
      if (++fill_ == 8) {
        out_.push_back(acc_);
        acc_ = 0;
        fill_ = 0;
      }
    }
  }

  void flush() {
    if (fill_ == 0) return;
    out_.push_back(static_cast<std::uint8_t>(acc_ << (8 - fill_)));
    acc_ = 0;
    fill_ = 0;
  }

 private:
  std::vector<std::uint8_t>& out_;
  std::uint8_t acc_ = 0;
  int fill_ = 0;
};

class BitUnpacker {
 public:
  explicit BitUnpacker(std::span<const std::uint8_t> row) : row_(row) {}

  std::uint32_t get(int bits) {
    std::uint32_t v = 0;
    for (int b = 0; b < bits; ++b) {
      const std::uint8_t byte = row_[pos_ / 8];
      v = (v << 1) | ((byte >> (7 - pos_ % 8)) & 1u);
      ++pos_;
    }
    return v;
  }

 private:
  std::span<const std::uint8_t> row_;
  std::size_t pos_ = 0;
};

std::size_t bytes_for(std::uint64_t bits) { return static_cast<std::size_t>((bits + 7) / 8); }

[[noreturn]] void corrupt(const std::string& layer, const std::string& what) {
  throw_error(ErrorKind::kCorruption, "layer '" + layer + "': " + what);
}

void check_grid(const LayerRecord& r, const GridParams& g, int bits) {
  if (g.bits != bits) {
    corrupt(r.name, "grid has " + std::to_string(g.bits) + " bits, scheme says " +
                        std::to_string(bits));
  }
}

void check_consistency(const LayerRecord& r) {
  if (r.sigma.size() != r.rank || r.scheme.size() != r.rank) {
    corrupt(r.name, "sigma/scheme length differs from rank");
  }
  if (r.rank != std::min(r.h_out, r.h_in)) corrupt(r.name, "rank is not min(h_out, h_in)");
  for (std::uint8_t b : r.scheme) {
    if (!(b == 0 || (b >= 2 && b <= kMaxBits))) {
      corrupt(r.name, "scheme holds unsupported bit-width " + std::to_string(b));
    }
  }
  const auto active = r.active_rows();
  const auto classes = r.active_classes();
  if (r.v_grids.size() != active.size()) corrupt(r.name, "V grid count mismatch");
  if (r.u_grids.size() != r.h_out) corrupt(r.name, "U grid row count mismatch");
  if (r.v_codes.size() != active.size() * r.h_in) corrupt(r.name, "V code count mismatch");
  if (r.u_codes.size() != static_cast<std::size_t>(r.h_out) * active.size()) {
    corrupt(r.name, "U code count mismatch");
  }
  for (std::size_t t = 0; t < active.size(); ++t) {
    const int bits = r.scheme[active[t]];
    check_grid(r, r.v_grids[t], bits);
    for (std::size_t j = 0; j < r.h_in; ++j) {
      if (r.v_codes[t * r.h_in + j] > r.v_grids[t].max_code()) {
        corrupt(r.name, "V code out of range");
      }
    }
  }
  for (std::size_t o = 0; o < r.h_out; ++o) {
    if (r.u_grids[o].size() != classes.size()) corrupt(r.name, "U class count mismatch");
    for (std::size_t c = 0; c < classes.size(); ++c) check_grid(r, r.u_grids[o][c], classes[c]);
    for (std::size_t t = 0; t < active.size(); ++t) {
      const std::uint32_t max_code = (1u << r.scheme[active[t]]) - 1u;
      if (r.u_codes[o * active.size() + t] > max_code) corrupt(r.name, "U code out of range");
    }
  }
  if (r.payload_bits != count_payload_bits(r)) {
    corrupt(r.name, "declared payload " + std::to_string(r.payload_bits) +
                        " bits, scheme accounts for " +
                        std::to_string(count_payload_bits(r)));
  }
}

void write_grid(ByteWriter& w, const GridParams& g) {
  w.f32(static_cast<float>(g.scale));
  w.i32(g.zero_point);
}

GridParams read_grid(ByteReader& r, int bits) {
  GridParams g;
  g.bits = bits;
  g.scale = static_cast<double>(r.f32());
  g.zero_point = r.i32();
  return g;
}

void write_record(ByteWriter& w, const LayerRecord& r) {
  check_consistency(r);
  if (r.name.size() > 0xFFFF) corrupt(r.name.substr(0, 32), "name too long");
  const std::size_t start = w.size();
  w.u16(static_cast<std::uint16_t>(r.name.size()));
  w.text(r.name);
  w.u32(r.h_out);
  w.u32(r.h_in);
  w.u32(r.rank);
  w.u64(r.payload_bits);
  w.u64(r.budget_bits);
  for (double s : r.sigma) w.f64(s);
  for (std::uint8_t b : r.scheme) w.u8(b);

  const auto active = r.active_rows();
  for (std::size_t t = 0; t < active.size(); ++t) {
    const int bits = r.scheme[active[t]];
    write_grid(w, r.v_grids[t]);
    BitPacker packer(w.buffer());
    for (std::size_t j = 0; j < r.h_in; ++j) packer.put(r.v_codes[t * r.h_in + j], bits);
    packer.flush();
  }
  for (std::size_t o = 0; o < r.h_out; ++o) {
    for (const auto& g : r.u_grids[o]) write_grid(w, g);
    BitPacker packer(w.buffer());
    for (std::size_t t = 0; t < active.size(); ++t)
      packer.put(r.u_codes[o * active.size() + t], r.scheme[active[t]]);
    packer.flush();
  }
  const auto& buf = w.buffer();
  const auto crc = crc32(0L, buf.data() + start, static_cast<uInt>(buf.size() - start));
  w.u32(static_cast<std::uint32_t>(crc));
}

LayerRecord read_record(ByteReader& rd, std::span<const std::uint8_t> all) {
  const std::size_t start = rd.position();
  LayerRecord r;
  r.name = rd.text(rd.u16());
  r.h_out = rd.u32();
  r.h_in = rd.u32();
  r.rank = rd.u32();
  r.payload_bits = rd.u64();
  r.budget_bits = rd.u64();
  if (r.rank != std::min(r.h_out, r.h_in)) corrupt(r.name, "rank is not min(h_out, h_in)");
  if (9ull * r.rank > rd.remaining()) corrupt(r.name, "rank exceeds remaining bytes");
  r.sigma.resize(r.rank);
  for (double& s : r.sigma) s = rd.f64();
  r.scheme.resize(r.rank);
  for (auto& b : r.scheme) {
    b = rd.u8();
    if (!(b == 0 || (b >= 2 && b <= kMaxBits))) {
      corrupt(r.name, "scheme holds unsupported bit-width " + std::to_string(b));
    }
  }

  const auto active = r.active_rows();
  const auto classes = r.active_classes();
  // Check the declared sizes before allocating anything for them.
  std::uint64_t u_row_bits = 0;
  std::uint64_t need = 4;
  for (std::size_t i : active) {
    u_row_bits += r.scheme[i];
    need += 8 + bytes_for(static_cast<std::uint64_t>(r.h_in) * r.scheme[i]);
  }
  need += static_cast<std::uint64_t>(r.h_out) * (8 * classes.size() + bytes_for(u_row_bits));
  if (need > rd.remaining()) corrupt(r.name, "record is shorter than its header declares");

  r.v_codes.reserve(active.size() * r.h_in);
  for (std::size_t t = 0; t < active.size(); ++t) {
    const int bits = r.scheme[active[t]];
    r.v_grids.push_back(read_grid(rd, bits));
    BitUnpacker up(rd.bytes(bytes_for(static_cast<std::uint64_t>(r.h_in) * bits)));
    for (std::size_t j = 0; j < r.h_in; ++j) r.v_codes.push_back(up.get(bits));
  }
  r.u_grids.resize(r.h_out);
  r.u_codes.reserve(static_cast<std::size_t>(r.h_out) * active.size());
  for (std::size_t o = 0; o < r.h_out; ++o) {
    for (int c : classes) r.u_grids[o].push_back(read_grid(rd, c));
    BitUnpacker up(rd.bytes(bytes_for(u_row_bits)));
    for (std::size_t i : active) r.u_codes.push_back(up.get(r.scheme[i]));
  }
  const std::size_t end = rd.position();
  const std::uint32_t stored = rd.u32();
  const auto crc = static_cast<std::uint32_t>(
      crc32(0L, all.data() + start, static_cast<uInt>(end - start)));
  if (crc != stored) corrupt(r.name, "checksum mismatch");
  if (r.payload_bits != count_payload_bits(r)) {
    corrupt(r.name, "declared payload " + std::to_string(r.payload_bits) +
                        " bits, scheme accounts for " +
                        std::to_string(count_payload_bits(r)));
  }
  return r;
}

}  // namespace

std::vector<std::size_t> LayerRecord::active_rows() const {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < scheme.size(); ++i)
    if (scheme[i] != 0) rows.push_back(i);
  return rows;
}

std::vector<int> LayerRecord::active_classes() const {
  std::vector<int> bits(scheme.begin(), scheme.end());
  return deltamix::active_classes(bits);
}

const LayerRecord& CompressedDelta::layer(std::string_view name) const {
  for (const auto& l : layers)
    if (l.name == name) return l;
  throw_error(ErrorKind::kLookup, "no layer named '" + std::string(name) + "'");
}

LayerRecord to_record(const LayerResult& res) {
  LayerRecord r;
  r.name = res.name;
  r.h_out = static_cast<std::uint32_t>(res.h_out);
  r.h_in = static_cast<std::uint32_t>(res.h_in);
  r.rank = static_cast<std::uint32_t>(res.sigma.size());
  r.budget_bits = static_cast<std::uint64_t>(std::max<std::int64_t>(0, res.budget));
  r.sigma = res.sigma;
  for (int b : res.scheme.assignment) r.scheme.push_back(static_cast<std::uint8_t>(b));

  const auto active = r.active_rows();
  for (std::size_t i : active) {
    r.v_grids.push_back(res.v_quant.grids[i].at(0));
    for (std::size_t j = 0; j < r.h_in; ++j)
      r.v_codes.push_back(res.v_quant.codes[i * res.v_quant.cols + j]);
  }
  r.u_grids = res.u_quant.grids;
  for (std::size_t o = 0; o < r.h_out; ++o)
    for (std::size_t i : active) r.u_codes.push_back(res.u_quant.codes[o * res.u_quant.cols + i]);
  r.payload_bits = count_payload_bits(r);
  return r;
}

std::uint64_t count_payload_bits(const LayerRecord& r) {
  std::uint64_t total = 0;
  for (std::uint8_t b : r.scheme)
    total += static_cast<std::uint64_t>(r.h_in + r.h_out) * b;
  return total;
}

SizeReport size_report(const LayerRecord& r) {
  SizeReport s;
  s.payload_bits = count_payload_bits(r);
  const auto active = r.active_rows();
  std::uint64_t u_row_bits = 0;
  for (std::size_t i : active) {
    const std::uint64_t v_bits = static_cast<std::uint64_t>(r.h_in) * r.scheme[i];
    s.padding_bits += bytes_for(v_bits) * 8 - v_bits;
    u_row_bits += r.scheme[i];
  }
  s.padding_bits += r.h_out * (bytes_for(u_row_bits) * 8 - u_row_bits);
  const std::uint64_t classes = r.active_classes().size();
  s.metadata_bytes = 2 + r.name.size() + 3 * 4 + 2 * 8 + 8 * r.rank + r.rank +
                     8 * active.size() + 8 * classes * r.h_out + 4;
  s.record_bytes = s.metadata_bytes + (s.payload_bits + s.padding_bits) / 8;
  return s;
}

std::vector<std::uint8_t> pack(const CompressedDelta& delta) {
  ByteWriter w;
  w.text(std::string_view(kMagic, 4));
  w.u16(kContainerVersion);
  w.u32(static_cast<std::uint32_t>(delta.layers.size()));
  for (const auto& layer : delta.layers) write_record(w, layer);
  return w.take();
}

CompressedDelta unpack(std::span<const std::uint8_t> bytes) {
  ByteReader rd(bytes, "container");
  if (rd.text(4) != std::string_view(kMagic, 4)) {
    throw_error(ErrorKind::kCorruption, "container: bad magic (expected DMIX)");
  }
  const std::uint16_t version = rd.u16();
  if (version != kContainerVersion) {
    throw_error(ErrorKind::kCorruption,
                "container: unsupported version " + std::to_string(version));
  }
  const std::uint32_t count = rd.u32();
  CompressedDelta delta;
  for (std::uint32_t i = 0; i < count; ++i) delta.layers.push_back(read_record(rd, bytes));
  if (rd.remaining() != 0) {
    throw_error(ErrorKind::kCorruption, "container: " + std::to_string(rd.remaining()) +
                                            " trailing bytes");
  }
  return delta;
}

DenseMatrix reconstruct(const LayerRecord& r) {
  const auto active = r.active_rows();
  const auto classes = r.active_classes();
  DenseMatrix v_hat(r.rank, r.h_in);
  for (std::size_t t = 0; t < active.size(); ++t)
    for (std::size_t j = 0; j < r.h_in; ++j)
      v_hat(active[t], j) = dequantize_code(r.v_codes[t * r.h_in + j], r.v_grids[t]);
  DenseMatrix u_hat(r.h_out, r.rank);
  for (std::size_t o = 0; o < r.h_out; ++o) {
    for (std::size_t t = 0; t < active.size(); ++t) {
      const int bits = r.scheme[active[t]];
      const auto c = static_cast<std::size_t>(
          std::find(classes.begin(), classes.end(), bits) - classes.begin());
      u_hat(o, active[t]) =
          dequantize_code(r.u_codes[o * active.size() + t], r.u_grids[o][c]);
    }
  }
  return reconstruct_from_factors(u_hat, r.sigma, v_hat);
}

DenseMatrix reconstruct(const CompressedDelta& delta, std::string_view layer) {
  return reconstruct(delta.layer(layer));
}

std::uint32_t read_packed_code(std::span<const std::uint8_t> bytes,
                               std::size_t row_offset, int bits, std::size_t index) {
  std::uint32_t v = 0;
  const std::size_t first = row_offset * 8 + index * static_cast<std::size_t>(bits);
  for (int b = 0; b < bits; ++b) {
    const std::size_t pos = first + static_cast<std::size_t>(b);
    v = (v << 1) | ((bytes[pos / 8] >> (7 - pos % 8)) & 1u);
  }
  return v;
}

void save_container(const std::filesystem::path& path, const CompressedDelta& delta) {
  write_file(path, pack(delta));
}

CompressedDelta load_container(const std::filesystem::path& path) {
  return unpack(read_file(path));
}

}  // namespace deltamix
