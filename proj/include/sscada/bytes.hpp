#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sscada {

using Bytes = std::vector<uint8_t>;

using Key16 = std::array<uint8_t, 16>;
using Key32 = std::array<uint8_t, 32>;
using Digest = std::array<uint8_t, 32>;
using MacTag = std::array<uint8_t, 16>;
using Nonce16 = std::array<uint8_t, 16>;

std::string to_hex(std::span<const uint8_t> data);
Bytes from_hex(std::string_view hex);  // throws Error on odd length / bad digit

inline Bytes to_bytes(std::string_view s) { return Bytes(s.begin(), s.end()); }
inline std::string to_string(std::span<const uint8_t> b) {
  return std::string(b.begin(), b.end());
}

void append_be16(Bytes& out, uint16_t v);
void append_be32(Bytes& out, uint32_t v);
void append_be64(Bytes& out, uint64_t v);
void append(Bytes& out, std::span<const uint8_t> data);

// Bounds-checked big-endian reads; throw FrameError when the buffer is short.
uint16_t read_be16(std::span<const uint8_t> in, size_t offset);
uint32_t read_be32(std::span<const uint8_t> in, size_t offset);
uint64_t read_be64(std::span<const uint8_t> in, size_t offset);

bool constant_time_eq(std::span<const uint8_t> a, std::span<const uint8_t> b);

template <size_t N>
std::array<uint8_t, N> take(std::span<const uint8_t> in, size_t offset = 0) {
  std::array<uint8_t, N> out{};
  for (size_t i = 0; i < N; ++i) out[i] = in[offset + i];
  return out;
}

}  // namespace sscada
