#pragma once

// Little-endian encode/decode helpers shared by the model and dataset formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "advaug/errors.hpp"

namespace advaug::detail {

class ByteWriter {
 public:
  void bytes(const char* data, std::size_t n) { buf_.insert(buf_.end(), data, data + n); }
  template <typename T>
  void le(T value) {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
              std::conditional_t<sizeof(T) == 4, std::uint32_t,
              std::conditional_t<sizeof(T) == 2, std::uint16_t, std::uint8_t>>>;
    const U raw = std::bit_cast<U>(value);
    for (std::size_t i = 0; i < sizeof(U); ++i) buf_.push_back(static_cast<char>((raw >> (8 * i)) & 0xFF));
  }
  std::vector<char>& buffer() { return buf_; }

 private:
  std::vector<char> buf_;
};

class ByteReader {
 public:
  ByteReader(const std::vector<char>& buf, std::string what) : buf_(buf), what_(std::move(what)) {}

  void need(std::size_t n) const {
    if (pos_ + n > buf_.size())
      throw FormatError(what_ + ": truncated file, expected at least " + std::to_string(pos_ + n) +
                        " bytes, got " + std::to_string(buf_.size()));
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string out(buf_.data() + pos_, n);
    pos_ += n;
    return out;
  }
  template <typename T>
  T le() {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
              std::conditional_t<sizeof(T) == 4, std::uint32_t,
              std::conditional_t<sizeof(T) == 2, std::uint16_t, std::uint8_t>>>;
    need(sizeof(U));
    U raw = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i)
      raw |= static_cast<U>(static_cast<U>(static_cast<unsigned char>(buf_[pos_ + i])) << (8 * i));
    pos_ += sizeof(U);
    return std::bit_cast<T>(raw);
  }
  std::size_t position() const { return pos_; }
  std::size_t size() const { return buf_.size(); }

 private:
  const std::vector<char>& buf_;
  std::string what_;
  std::size_t pos_ = 0;
};

std::vector<char> read_file(const std::string& path);
void write_file(const std::string& path, const std::vector<char>& bytes);

}  // namespace advaug::detail
