#include "sscada/crypto.hpp"

#include <openssl/evp.h>
#include <openssl/hmac.h>
#include <openssl/sha.h>

#include <memory>

#include "sscada/errors.hpp"

namespace sscada {

namespace {

struct CipherCtxFree {
  void operator()(EVP_CIPHER_CTX* ctx) const { EVP_CIPHER_CTX_free(ctx); }
};
using CipherCtx = std::unique_ptr<EVP_CIPHER_CTX, CipherCtxFree>;

CipherCtx make_ctx() {
  CipherCtx ctx(EVP_CIPHER_CTX_new());
  if (!ctx) throw Error("EVP_CIPHER_CTX_new failed");
  return ctx;
}

}  // namespace

Digest prf_hash(std::span<const uint8_t> data) {
  Digest out;
  SHA256(data.data(), data.size(), out.data());
  return out;
}

Digest hmac_sha256(std::span<const uint8_t> key, std::span<const uint8_t> data) {
  Digest out;
  unsigned int len = 0;
  if (!HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()), data.data(),
            data.size(), out.data(), &len) ||
      len != out.size()) {
    throw Error("HMAC failed");
  }
  return out;
}

DirectionKeys derive_direction_keys(const MasterSecret& master) {
  auto sub = [&](uint8_t label) {
    return hmac_sha256(master, std::span<const uint8_t>(&label, 1));
  };
  DirectionKeys keys;
  Digest d1 = sub(0x01);
  std::copy_n(d1.begin(), 16, keys.enc_a_to_b.begin());
  keys.mac_a_to_b = sub(0x02);
  Digest d3 = sub(0x03);
  std::copy_n(d3.begin(), 16, keys.enc_b_to_a.begin());
  keys.mac_b_to_a = sub(0x04);
  return keys;
}

MacTag mac_compute(const Key32& key, std::span<const uint8_t> data) {
  Digest full = hmac_sha256(key, data);
  MacTag tag;
  std::copy_n(full.begin(), tag.size(), tag.begin());
  return tag;
}

bool mac_verify(const Key32& key, std::span<const uint8_t> data,
                std::span<const uint8_t> tag) {
  if (tag.size() != 16) throw FrameError("MAC tag must be 16 bytes");
  MacTag expect = mac_compute(key, data);
  return constant_time_eq(expect, tag);
}

Bytes cbc_encrypt(const Key16& key, const Key16& iv,
                  std::span<const uint8_t> plaintext) {
  auto ctx = make_ctx();
  if (!EVP_EncryptInit_ex(ctx.get(), EVP_aes_128_cbc(), nullptr, key.data(),
                          iv.data())) {
    throw Error("AES-CBC init failed");
  }
  Bytes out(plaintext.size() + 16);
  int len1 = 0;
  if (!EVP_EncryptUpdate(ctx.get(), out.data(), &len1, plaintext.data(),
                         static_cast<int>(plaintext.size()))) {
    throw Error("AES-CBC update failed");
  }
  int len2 = 0;
  if (!EVP_EncryptFinal_ex(ctx.get(), out.data() + len1, &len2)) {
    throw Error("AES-CBC final failed");
  }
  out.resize(static_cast<size_t>(len1) + static_cast<size_t>(len2));
  return out;
}

Bytes cbc_decrypt(const Key16& key, const Key16& iv,
                  std::span<const uint8_t> ciphertext) {
  if (ciphertext.empty() || ciphertext.size() % 16 != 0) {
    throw FrameError("ciphertext length not a positive multiple of 16");
  }
  auto ctx = make_ctx();
  if (!EVP_DecryptInit_ex(ctx.get(), EVP_aes_128_cbc(), nullptr, key.data(),
                          iv.data())) {
    throw Error("AES-CBC init failed");
  }
  Bytes out(ciphertext.size());
  int len1 = 0;
  if (!EVP_DecryptUpdate(ctx.get(), out.data(), &len1, ciphertext.data(),
                         static_cast<int>(ciphertext.size()))) {
    throw Error("AES-CBC update failed");
  }
  int len2 = 0;
  if (!EVP_DecryptFinal_ex(ctx.get(), out.data() + len1, &len2)) {
    throw PaddingError("bad PKCS#7 padding");
  }
  out.resize(static_cast<size_t>(len1) + static_cast<size_t>(len2));
  return out;
}

namespace {

Key16 ecb_block(const Key16& key, const Key16& block, bool enc) {
  auto ctx = make_ctx();
  if (!EVP_CipherInit_ex(ctx.get(), EVP_aes_128_ecb(), nullptr, key.data(),
                         nullptr, enc ? 1 : 0)) {
    throw Error("AES-ECB init failed");
  }
  EVP_CIPHER_CTX_set_padding(ctx.get(), 0);
  Key16 out;
  int len = 0;
  if (!EVP_CipherUpdate(ctx.get(), out.data(), &len, block.data(),
                        static_cast<int>(block.size())) ||
      len != 16) {
    throw Error("AES-ECB update failed");
  }
  int len2 = 0;
  if (!EVP_CipherFinal_ex(ctx.get(), out.data() + len, &len2) || len2 != 0) {
    throw Error("AES-ECB final failed");
  }
  return out;
}

}  // namespace

Key16 aes_encrypt_block(const Key16& key, const Key16& block) {
  return ecb_block(key, block, true);
}

Key16 aes_decrypt_block(const Key16& key, const Key16& block) {
  return ecb_block(key, block, false);
}

std::vector<ChainKey> chain_generate(const Key32& seed, uint32_t n) {
  if (n < 1) throw Error("chain length must be at least 1");
  std::vector<ChainKey> chain(n + 1);
  chain[n] = ChainKey{seed, n};
  for (uint32_t i = n; i > 0; --i) {
    chain[i - 1].bytes = prf_hash(chain[i].bytes);
    chain[i - 1].index = i - 1;
  }
  return chain;
}

bool chain_verify(const ChainKey& trusted, const ChainKey& candidate) {
  if (candidate.index <= trusted.index) {
    throw Error("candidate index must exceed trusted index");
  }
  Key32 cur = candidate.bytes;
  for (uint32_t i = candidate.index; i > trusted.index; --i) {
    cur = prf_hash(cur);
  }
  return constant_time_eq(cur, trusted.bytes);
}

}  // namespace sscada
