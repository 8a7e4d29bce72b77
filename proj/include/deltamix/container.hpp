#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "deltamix/gptq.hpp"
#include "deltamix/matrix.hpp"
#include "deltamix/pipeline.hpp"

namespace deltamix {

inline constexpr std::uint16_t kContainerVersion = 1;

// One compressed layer as stored on disk. Grids hold the single-precision
// scale exactly as written.
struct LayerRecord {
  std::string name;
  std::uint32_t h_out = 0;
  std::uint32_t h_in = 0;
  std::uint32_t rank = 0;
  std::uint64_t payload_bits = 0;  // declared; must equal the scheme recount
  std::uint64_t budget_bits = 0;
  std::vector<double> sigma;
  std::vector<std::uint8_t> scheme;   // bit per singular vector
  std::vector<GridParams> v_grids;    // one per active row of V
  std::vector<RowGrids> u_grids;      // per row of U, one per active class
  std::vector<std::uint32_t> v_codes;  // active rows × h_in
  std::vector<std::uint32_t> u_codes;  // h_out × active columns

  std::vector<std::size_t> active_rows() const;
  std::vector<int> active_classes() const;
  bool operator==(const LayerRecord&) const = default;
};

struct CompressedDelta {
  std::vector<LayerRecord> layers;

  const LayerRecord& layer(std::string_view name) const;  // lookup error if absent
};

LayerRecord to_record(const LayerResult& result);

// Σ over active rows of (h_in + h_out) · bit.
std::uint64_t count_payload_bits(const LayerRecord& record);

struct SizeReport {
  std::uint64_t payload_bits = 0;
  std::uint64_t padding_bits = 0;  // per-row byte alignment
  std::uint64_t metadata_bytes = 0;
  std::uint64_t record_bytes = 0;  // everything written for the layer
};

SizeReport size_report(const LayerRecord& record);

// Serializes the layers; throws a corruption error if a record's scheme,
// grids and codes disagree.
std::vector<std::uint8_t> pack(const CompressedDelta& delta);
// Parses and verifies every layer checksum and payload recount.
CompressedDelta unpack(std::span<const std::uint8_t> bytes);

DenseMatrix reconstruct(const LayerRecord& record);
DenseMatrix reconstruct(const CompressedDelta& delta, std::string_view layer);

// Naive reader: fetches code `index` of a row stream written MSB-first at
// `bits` per code, starting at byte `row_offset`.
std::uint32_t read_packed_code(std::span<const std::uint8_t> bytes,
                               std::size_t row_offset, int bits,
                               std::size_t index);

void save_container(const std::filesystem::path& path, const CompressedDelta& delta);
CompressedDelta load_container(const std::filesystem::path& path);

}  // namespace deltamix
