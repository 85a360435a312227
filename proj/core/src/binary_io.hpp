#pragma once

// Little-endian byte buffers shared by the exemplar and flow file formats.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "pfa/error.hpp"
#include "pfa/raster.hpp"

namespace pfa::detail {

class ByteWriter {
 public:
  template <typename T>
  void put(T value) {
    std::uint8_t bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    data_.insert(data_.end(), bytes, bytes + sizeof(T));
  }
  void put_bytes(std::span<const std::uint8_t> bytes) { data_.insert(data_.end(), bytes.begin(), bytes.end()); }
  void put_string(const std::string& s) {
    put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    data_.insert(data_.end(), s.begin(), s.end());
  }
  /// Row-major, least significant bit first.
  void put_mask(const PixelMask& mask);

  const std::vector<std::uint8_t>& data() const { return data_; }
  void clear() { data_.clear(); }

 private:
  std::vector<std::uint8_t> data_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }

  /// Throws kTruncated naming the expected and available byte counts.
  void require(std::size_t n, const char* what) const;

  template <typename T>
  T get(const char* what) {
    require(sizeof(T), what);
    std::uint8_t bytes[sizeof(T)];
    std::memcpy(bytes, data_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    pos_ += sizeof(T);
    T value;
    std::memcpy(&value, bytes, sizeof(T));
    return value;
  }
  std::span<const std::uint8_t> get_bytes(std::size_t n, const char* what) {
    require(n, what);
    auto out = data_.subspan(pos_, n);
    pos_ += n;
    return out;
  }
  std::string get_string(const char* what);
  PixelMask get_mask(int width, int height, const char* what);

 private:
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

std::size_t packed_mask_bytes(int width, int height);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace pfa::detail
