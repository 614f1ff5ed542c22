#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <vector>

namespace naf::binary {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

inline std::uint32_t byteswap32(std::uint32_t v) {
  return (v >> 24) | ((v >> 8) & 0xff00u) | ((v << 8) & 0xff0000u) | (v << 24);
}

inline std::uint32_t to_le(std::uint32_t v) {
  return std::endian::native == std::endian::little ? v : byteswap32(v);
}

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  v = to_le(v);
  const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
  out.insert(out.end(), p, p + 4);
}

inline void put_f32(std::vector<std::uint8_t>& out, float f) {
  put_u32(out, std::bit_cast<std::uint32_t>(f));
}

inline std::uint32_t get_u32(const std::uint8_t* p) {
  std::uint32_t v;
  std::memcpy(&v, p, 4);
  return to_le(v);
}

inline float get_f32(const std::uint8_t* p) { return std::bit_cast<float>(get_u32(p)); }

/// Writes float32 values in little-endian order.
inline void write_f32(std::ostream& os, std::span<const float> values) {
  if constexpr (std::endian::native == std::endian::little) {
    os.write(reinterpret_cast<const char*>(values.data()),
             static_cast<std::streamsize>(values.size() * sizeof(float)));
  } else {
    for (float f : values) {
      const std::uint32_t v = byteswap32(std::bit_cast<std::uint32_t>(f));
      os.write(reinterpret_cast<const char*>(&v), 4);
    }
  }
}

/// Reads exactly values.size() little-endian float32 values; false on short read.
inline bool read_f32(std::istream& is, std::span<float> values) {
  is.read(reinterpret_cast<char*>(values.data()),
          static_cast<std::streamsize>(values.size() * sizeof(float)));
  if (is.gcount() != static_cast<std::streamsize>(values.size() * sizeof(float))) return false;
  if constexpr (std::endian::native != std::endian::little) {
    for (float& f : values) f = std::bit_cast<float>(byteswap32(std::bit_cast<std::uint32_t>(f)));
  }
  return true;
}

}  // namespace naf::binary
