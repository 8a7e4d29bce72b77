#include "deltamix/bytes.hpp"

#include <fstream>
#include <iterator>

#include "deltamix/error.hpp"

namespace deltamix {

void ByteReader::need(std::size_t n) const {
  if (n > remaining()) {
    throw_error(ErrorKind::kCorruption,
                context_ + ": truncated at byte " + std::to_string(pos_) +
                    " (needed " + std::to_string(n) + ", have " +
                    std::to_string(remaining()) + ")");
  }
}

std::span<const std::uint8_t> ByteReader::bytes(std::size_t n) {
  need(n);
  auto out = data_.subspan(pos_, n);
  pos_ += n;
  return out;
}

std::string ByteReader::text(std::size_t n) {
  auto b = bytes(n);
  return std::string(b.begin(), b.end());
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw_error(ErrorKind::kLookup, "cannot open " + path.string());
  }
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void write_file(const std::filesystem::path& path,
                std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw_error(ErrorKind::kConfig, "cannot write " + path.string());
  }
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw_error(ErrorKind::kConfig, "short write to " + path.string());
  }
}

}  // namespace deltamix
