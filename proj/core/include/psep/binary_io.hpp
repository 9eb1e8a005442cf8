#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>

#include "psep/errors.hpp"

/// Little-endian primitives shared by the dataset, checkpoint and WAV codecs.
namespace psep::io {

inline void put_u16(std::ostream& os, std::uint16_t v) {
  const char b[2] = {static_cast<char>(v & 0xFF), static_cast<char>(v >> 8)};
  os.write(b, 2);
}

inline void put_u32(std::ostream& os, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  os.write(b, 4);
}

inline void put_u64(std::ostream& os, std::uint64_t v) {
  put_u32(os, static_cast<std::uint32_t>(v));
  put_u32(os, static_cast<std::uint32_t>(v >> 32));
}

inline void put_f32(std::ostream& os, float v) { put_u32(os, std::bit_cast<std::uint32_t>(v)); }
inline void put_f64(std::ostream& os, double v) { put_u64(os, std::bit_cast<std::uint64_t>(v)); }

inline void put_string(std::ostream& os, std::string_view s) {
  put_u32(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline void get_bytes(std::istream& is, char* dst, std::size_t n, std::string_view what) {
  is.read(dst, static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(is.gcount()) != n) throw FormatError("truncated " + std::string(what));
}

inline std::uint16_t get_u16(std::istream& is, std::string_view what) {
  unsigned char b[2];
  get_bytes(is, reinterpret_cast<char*>(b), 2, what);
  return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

inline std::uint32_t get_u32(std::istream& is, std::string_view what) {
  unsigned char b[4];
  get_bytes(is, reinterpret_cast<char*>(b), 4, what);
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

inline std::uint64_t get_u64(std::istream& is, std::string_view what) {
  const std::uint64_t lo = get_u32(is, what);
  const std::uint64_t hi = get_u32(is, what);
  return lo | (hi << 32);
}

inline float get_f32(std::istream& is, std::string_view what) { return std::bit_cast<float>(get_u32(is, what)); }
inline double get_f64(std::istream& is, std::string_view what) { return std::bit_cast<double>(get_u64(is, what)); }

inline std::string get_string(std::istream& is, std::string_view what, std::uint32_t max_len = 1u << 20) {
  const std::uint32_t n = get_u32(is, what);
  if (n > max_len) throw FormatError("implausible string length in " + std::string(what));
  std::string s(n, '\0');
  get_bytes(is, s.data(), n, what);
  return s;
}

inline void expect_magic(std::istream& is, std::string_view magic, std::string_view what) {
  std::string got(magic.size(), '\0');
  get_bytes(is, got.data(), magic.size(), what);
  if (got != magic) throw FormatError("bad magic in " + std::string(what) + ": expected " + std::string(magic));
}

/// 64-bit FNV-1a, used for short content hashes.
inline std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace psep::io
