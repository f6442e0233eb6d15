#include "sscada/bytes.hpp"

#include <openssl/crypto.h>

#include "sscada/errors.hpp"

namespace sscada {

namespace {
int hex_digit(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}
}  // namespace

std::string to_hex(std::span<const uint8_t> data) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  out.reserve(data.size() * 2);
  for (uint8_t b : data) {
    out.push_back(digits[b >> 4]);
    out.push_back(digits[b & 0xf]);
  }
  return out;
}

Bytes from_hex(std::string_view hex) {
  if (hex.size() % 2 != 0) throw Error("hex string has odd length");
  Bytes out;
  out.reserve(hex.size() / 2);
  for (size_t i = 0; i < hex.size(); i += 2) {
    int hi = hex_digit(hex[i]);
    int lo = hex_digit(hex[i + 1]);
    if (hi < 0 || lo < 0) throw Error("invalid hex digit");
    out.push_back(static_cast<uint8_t>(hi << 4 | lo));
  }
  return out;
}

void append_be16(Bytes& out, uint16_t v) {
  out.push_back(static_cast<uint8_t>(v >> 8));
  out.push_back(static_cast<uint8_t>(v));
}

void append_be32(Bytes& out, uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<uint8_t>(v >> s));
}

void append_be64(Bytes& out, uint64_t v) {
  for (int s = 56; s >= 0; s -= 8) out.push_back(static_cast<uint8_t>(v >> s));
}

void append(Bytes& out, std::span<const uint8_t> data) {
  out.insert(out.end(), data.begin(), data.end());
}

uint16_t read_be16(std::span<const uint8_t> in, size_t offset) {
  if (offset + 2 > in.size()) throw FrameError("truncated 16-bit field");
  return static_cast<uint16_t>(in[offset] << 8 | in[offset + 1]);
}

uint32_t read_be32(std::span<const uint8_t> in, size_t offset) {
  if (offset + 4 > in.size()) throw FrameError("truncated 32-bit field");
  uint32_t v = 0;
  for (size_t i = 0; i < 4; ++i) v = v << 8 | in[offset + i];
  return v;
}

uint64_t read_be64(std::span<const uint8_t> in, size_t offset) {
  if (offset + 8 > in.size()) throw FrameError("truncated 64-bit field");
  uint64_t v = 0;
  for (size_t i = 0; i < 8; ++i) v = v << 8 | in[offset + i];
  return v;
}

bool constant_time_eq(std::span<const uint8_t> a, std::span<const uint8_t> b) {
  if (a.size() != b.size()) return false;
  return CRYPTO_memcmp(a.data(), b.data(), a.size()) == 0;
}

}  // namespace sscada
