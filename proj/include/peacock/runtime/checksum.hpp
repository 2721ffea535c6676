#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

#include <boost/crc.hpp>

namespace peacock {

/// CRC-64/XZ (ECMA-182 polynomial, reflected, inverted).
class Crc64 {
 public:
  void update(const void* data, std::size_t size) { crc_.process_bytes(data, size); }
  std::uint64_t value() const { return crc_.checksum(); }

 private:
  boost::crc_optimal<64, 0x42F0E1EBA9EA3693ull, ~0ull, ~0ull, true, true> crc_;
};

inline std::uint64_t crc64(std::span<const std::uint8_t> bytes) {
  Crc64 c;
  c.update(bytes.data(), bytes.size());
  return c.value();
}

}  // namespace peacock
