#include "binary_io.hpp"

#include <fstream>
#include <iterator>

namespace pfa::detail {

std::size_t packed_mask_bytes(int width, int height) {
  return (static_cast<std::size_t>(width) * height + 7) / 8;
}

void ByteWriter::put_mask(const PixelMask& mask) {
  std::vector<std::uint8_t> bytes(packed_mask_bytes(mask.width(), mask.height()), 0);
  mask.for_each_set([&](int x, int y) {
    const std::size_t bit = static_cast<std::size_t>(y) * mask.width() + x;
    bytes[bit >> 3] |= static_cast<std::uint8_t>(1U << (bit & 7));
  });
  put_bytes(bytes);
}

void ByteReader::require(std::size_t n, const char* what) const {
  if (remaining() < n) {
    throw Error(ErrorCode::kTruncated,
                std::string("truncated file while reading ") + what + ": expected " +
                    std::to_string(pos_ + n) + " bytes, got " + std::to_string(data_.size()));
  }
}

std::string ByteReader::get_string(const char* what) {
  const auto len = get<std::uint32_t>(what);
  const auto bytes = get_bytes(len, what);
  return std::string(bytes.begin(), bytes.end());
}

PixelMask ByteReader::get_mask(int width, int height, const char* what) {
  const auto bytes = get_bytes(packed_mask_bytes(width, height), what);
  PixelMask mask(width, height);
  const std::size_t n = static_cast<std::size_t>(width) * height;
  for (std::size_t bit = 0; bit < n; ++bit) {
    if (bytes[bit >> 3] & (1U << (bit & 7))) {
      mask.set(static_cast<int>(bit % width), static_cast<int>(bit / width));
    }
  }
  return mask;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return std::vector<std::uint8_t>((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "failed writing " + path.string());
}

}  // namespace pfa::detail
