#pragma once

// Little-endian encoding helpers shared by the dataset and model file formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string_view>

namespace lrgnn::detail {

/// Nearest float value, as stored in the file formats. The volatile store keeps
/// GCC 11 at -O3 from vectorizing the double -> float -> double round trip away.
inline double round_f32(double v) {
  volatile float f = static_cast<float>(v);
  return static_cast<double>(f);
}

inline void put_u32(std::ostream& out, std::uint32_t v) {
  const char bytes[4] = {static_cast<char>(v & 0xffu), static_cast<char>((v >> 8) & 0xffu),
                         static_cast<char>((v >> 16) & 0xffu), static_cast<char>((v >> 24) & 0xffu)};
  out.write(bytes, 4);
}

inline void put_f32(std::ostream& out, double v) {
  put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
}

inline void put_tag(std::ostream& out, std::string_view tag) { out.write(tag.data(), 4); }

/// Reads 4 bytes; returns false on a short read.
inline bool get_u32(std::istream& in, std::uint32_t& v) {
  unsigned char bytes[4];
  if (!in.read(reinterpret_cast<char*>(bytes), 4)) return false;
  v = static_cast<std::uint32_t>(bytes[0]) | (static_cast<std::uint32_t>(bytes[1]) << 8) |
      (static_cast<std::uint32_t>(bytes[2]) << 16) | (static_cast<std::uint32_t>(bytes[3]) << 24);
  return true;
}

inline bool get_f32(std::istream& in, double& v) {
  std::uint32_t bits = 0;
  if (!get_u32(in, bits)) return false;
  v = static_cast<double>(std::bit_cast<float>(bits));
  return true;
}

}  // namespace lrgnn::detail
