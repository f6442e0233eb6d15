#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sscada/bytes.hpp"

namespace sscada {

// 32-byte secret shared by a device pair at deployment time.
using MasterSecret = Key32;

// Per-direction session keys derived from one master secret. The A->B and
// B->A directions never share key material.
struct DirectionKeys {
  Key16 enc_a_to_b;
  Key32 mac_a_to_b;
  Key16 enc_b_to_a;
  Key32 mac_b_to_a;
};

// SHA-256. Serves as the pseudorandom function H(.) everywhere.
Digest prf_hash(std::span<const uint8_t> input);

Digest hmac_sha256(std::span<const uint8_t> key, std::span<const uint8_t> data);

// Derivation labels are single bytes 0x01..0x04; cipher keys keep the first
// 16 bytes of the 32-byte HMAC output.
DirectionKeys derive_direction_keys(const MasterSecret& master);

// 16-byte tag: truncated HMAC-SHA-256.
MacTag mac_compute(const Key32& key, std::span<const uint8_t> data);

// Constant-time comparison; throws FrameError unless tag is exactly 16 bytes.
bool mac_verify(const Key32& key, std::span<const uint8_t> data,
                std::span<const uint8_t> tag);

// AES-128-CBC with PKCS#7 padding. Output length = ((len/16)+1)*16.
Bytes cbc_encrypt(const Key16& key, const Key16& iv,
                  std::span<const uint8_t> plaintext);

// Inverse of cbc_encrypt. Throws FrameError on bad length, PaddingError when
// the padding does not verify.
Bytes cbc_decrypt(const Key16& key, const Key16& iv,
                  std::span<const uint8_t> ciphertext);

// Raw single-block AES-128 (no mode, no padding). The AGA draft builds its
// per-block masks from this.
Key16 aes_encrypt_block(const Key16& key, const Key16& block);
Key16 aes_decrypt_block(const Key16& key, const Key16& block);

// One element of a one-way key chain K_0..K_n with K_i = H(K_{i+1}).
struct ChainKey {
  Key32 bytes;
  uint32_t index = 0;
};

// Generates the full chain from the secret end K_n = seed. Returns n+1
// elements indexed 0..n. n must be >= 1.
std::vector<ChainKey> chain_generate(const Key32& seed, uint32_t n);

// True iff hashing candidate (candidate.index - trusted.index) times yields
// trusted. Throws Error unless trusted.index < candidate.index.
bool chain_verify(const ChainKey& trusted, const ChainKey& candidate);

}  // namespace sscada
