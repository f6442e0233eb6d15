#include "sscada/p2p.hpp"

#include "sscada/errors.hpp"

namespace sscada::p2p {

std::array<uint8_t, 16> Counter128::to_be_bytes() const {
  std::array<uint8_t, 16> out;
  for (int i = 0; i < 8; ++i) out[i] = uint8_t(hi >> (56 - 8 * i));
  for (int i = 0; i < 8; ++i) out[8 + i] = uint8_t(lo >> (56 - 8 * i));
  return out;
}

Counter128 Counter128::from_be_bytes(std::span<const uint8_t> b) {
  if (b.size() != 16) throw FrameError("counter must be 16 bytes");
  Counter128 c;
  c.hi = read_be64(b, 0);
  c.lo = read_be64(b, 8);
  return c;
}

void Counter128::increment() {
  if (++lo == 0) ++hi;
}

std::optional<Counter128> Counter128::plus(uint64_t k) const {
  Counter128 c = *this;
  c.lo += k;
  if (c.lo < lo) {
    if (c.hi == UINT64_MAX) return std::nullopt;
    ++c.hi;
  }
  return c;
}

const Key16& ChannelState::send_enc_key() const {
  return role == Role::MASTER ? keys.enc_a_to_b : keys.enc_b_to_a;
}
const Key32& ChannelState::send_mac_key() const {
  return role == Role::MASTER ? keys.mac_a_to_b : keys.mac_b_to_a;
}
const Key16& ChannelState::recv_enc_key() const {
  return role == Role::MASTER ? keys.enc_b_to_a : keys.enc_a_to_b;
}
const Key32& ChannelState::recv_mac_key() const {
  return role == Role::MASTER ? keys.mac_b_to_a : keys.mac_a_to_b;
}

ChannelState make_channel(const MasterSecret& master, Role role,
                          ChannelConfig config) {
  if (config.prefix_bits < 32 || config.prefix_bits > 128 ||
      config.prefix_bits % 8 != 0) {
    throw Error("prefix_bits must be 32..128 and a multiple of 8");
  }
  if (config.trial_window < 1) throw Error("trial_window must be >= 1");
  ChannelState s;
  s.keys = derive_direction_keys(master);
  s.role = role;
  s.config = config;
  return s;
}

Bytes Frame::serialize() const {
  Bytes out = ciphertext;
  if (tag) append(out, *tag);
  return out;
}

Frame Frame::parse(std::span<const uint8_t> wire, bool mac_enabled) {
  size_t tag_len = mac_enabled ? 16 : 0;
  if (wire.size() < 16 + tag_len || (wire.size() - tag_len) % 16 != 0) {
    throw FrameError("p2p frame length invalid");
  }
  Frame f;
  f.ciphertext.assign(wire.begin(), wire.end() - tag_len);
  if (mac_enabled) f.tag = take<16>(wire, wire.size() - 16);
  return f;
}

const char* status_name(Status s) {
  switch (s) {
    case Status::ACCEPTED: return "ACCEPTED";
    case Status::PREFIX_REJECTED: return "PREFIX_REJECTED";
    case Status::MAC_FAILED_LOGGED: return "MAC_FAILED_LOGGED";
    case Status::MAC_FAILED_SUPPRESSED: return "MAC_FAILED_SUPPRESSED";
  }
  return "?";
}

namespace {

// Last l bits of H(counter); l is a whole number of bytes here.
Bytes counter_prefix(const Counter128& c, uint32_t prefix_bits) {
  Digest d = prf_hash(c.to_be_bytes());
  size_t n = prefix_bits / 8;
  return Bytes(d.end() - n, d.end());
}

Bytes mac_data(const Counter128& c, std::span<const uint8_t> rest) {
  Bytes data;
  append(data, c.to_be_bytes());
  append(data, rest);
  return data;
}

// True when the first ciphertext block, decrypted under candidate counter C,
// starts with the l-bit counter prefix.
bool prefix_matches(const ChannelState& state, const Frame& frame,
                    const Counter128& c) {
  Key16 first = take<16>(frame.ciphertext);
  Key16 p = aes_decrypt_block(state.recv_enc_key(), first);
  std::array<uint8_t, 16> iv = c.to_be_bytes();
  for (int i = 0; i < 16; ++i) p[i] ^= iv[i];
  Bytes expect = counter_prefix(c, state.config.prefix_bits);
  return constant_time_eq(std::span(p).first(expect.size()), expect);
}

}  // namespace

Frame channel_send(ChannelState& state, std::span<const uint8_t> message) {
  if (state.send_counter.is_max()) throw CounterExhausted("send counter at max");
  const Counter128& c = state.send_counter;
  std::array<uint8_t, 16> iv = c.to_be_bytes();

  Bytes payload = counter_prefix(c, state.config.prefix_bits);
  append(payload, message);

  Frame f;
  f.ciphertext = cbc_encrypt(state.send_enc_key(), take<16>(iv), payload);
  if (state.config.mac_enabled) {
    f.tag = mac_compute(state.send_mac_key(), mac_data(c, f.ciphertext));
  }
  state.send_counter.increment();
  return f;
}

DeliveryResult channel_receive(ChannelState& state, const Frame& frame) {
  if (frame.ciphertext.empty() || frame.ciphertext.size() % 16 != 0) {
    throw FrameError("p2p ciphertext length invalid");
  }
  if (state.config.mac_enabled && !frame.tag) {
    throw FrameError("missing MAC tag");
  }

  DeliveryResult out;
  out.counter_used = state.recv_counter;

  for (uint32_t k = 0; k < state.config.trial_window; ++k) {
    std::optional<Counter128> cand = state.recv_counter.plus(k);
    if (!cand) break;
    if (!prefix_matches(state, frame, *cand)) continue;

    out.counter_used = *cand;
    Counter128 next = *cand;
    next.increment();

    bool tag_ok = true;
    if (state.config.mac_enabled) {
      tag_ok = mac_verify(state.recv_mac_key(),
                          mac_data(*cand, frame.ciphertext), *frame.tag);
    }

    size_t prefix_len = state.config.prefix_bits / 8;

    if (state.config.mode == Mode::M2) {
      if (!tag_ok) {
        out.status = Status::MAC_FAILED_SUPPRESSED;
        return out;
      }
      Bytes payload = cbc_decrypt(state.recv_enc_key(), cand->to_be_bytes(),
                                  frame.ciphertext);
      if (payload.size() < prefix_len) {
        out.status = Status::MAC_FAILED_SUPPRESSED;
        return out;
      }
      out.plaintext = Bytes(payload.begin() + prefix_len, payload.end());
      out.status = Status::ACCEPTED;
      state.recv_counter = next;
      return out;
    }

    // M1 and M3 deliver before (or without) the tag verdict.
    Bytes payload;
    bool padding_ok = true;
    try {
      payload = cbc_decrypt(state.recv_enc_key(), cand->to_be_bytes(),
                            frame.ciphertext);
    } catch (const PaddingError&) {
      padding_ok = false;
    }
    if (padding_ok && payload.size() < prefix_len) padding_ok = false;
    state.recv_counter = next;
    if (!padding_ok) {
      out.status = Status::MAC_FAILED_LOGGED;
      state.resync_needed = true;
      return out;
    }
    out.plaintext = Bytes(payload.begin() + prefix_len, payload.end());
    if (state.config.mode == Mode::M1 || tag_ok) {
      out.status = Status::ACCEPTED;
    } else {
      out.status = Status::MAC_FAILED_LOGGED;
      state.resync_needed = true;
    }
    return out;
  }

  out.status = Status::PREFIX_REJECTED;
  return out;
}

AuthOnlyMessage channel_send_auth_only(ChannelState& state,
                                       std::span<const uint8_t> message) {
  if (state.send_counter.is_max()) throw CounterExhausted("send counter at max");
  AuthOnlyMessage out;
  out.message.assign(message.begin(), message.end());
  out.tag = mac_compute(state.send_mac_key(),
                        mac_data(state.send_counter, message));
  state.send_counter.increment();
  return out;
}

DeliveryResult channel_receive_auth_only(ChannelState& state,
                                         std::span<const uint8_t> message,
                                         std::span<const uint8_t> tag) {
  DeliveryResult out;
  out.counter_used = state.recv_counter;
  for (uint32_t k = 0; k < state.config.trial_window; ++k) {
    std::optional<Counter128> cand = state.recv_counter.plus(k);
    if (!cand) break;
    if (mac_verify(state.recv_mac_key(), mac_data(*cand, message), tag)) {
      out.plaintext = Bytes(message.begin(), message.end());
      out.status = Status::ACCEPTED;
      out.counter_used = *cand;
      state.recv_counter = *cand;
      state.recv_counter.increment();
      return out;
    }
  }
  out.status = Status::MAC_FAILED_SUPPRESSED;
  return out;
}

Bytes channel_passthrough(std::span<const uint8_t> message) {
  return Bytes(message.begin(), message.end());
}

namespace {

// Wrapping keys for the session handshake, labels 0x05/0x06 continuing the
// direction-key label space.
Key16 session_enc_key(const MasterSecret& master) {
  uint8_t label = 0x05;
  Digest d = hmac_sha256(master, std::span<const uint8_t>(&label, 1));
  return take<16>(d);
}

Key32 session_mac_key(const MasterSecret& master) {
  uint8_t label = 0x06;
  return hmac_sha256(master, std::span<const uint8_t>(&label, 1));
}

}  // namespace

Bytes SessionResponse::serialize() const {
  Bytes out = ciphertext;
  append(out, tag);
  return out;
}

SessionResponse SessionResponse::parse(std::span<const uint8_t> wire) {
  if (wire.size() < 32 || (wire.size() - 16) % 16 != 0) {
    throw FrameError("session response length invalid");
  }
  SessionResponse r;
  r.ciphertext.assign(wire.begin(), wire.end() - 16);
  r.tag = take<16>(wire, wire.size() - 16);
  return r;
}

Nonce16 session_initiate(Rng& rng) {
  Nonce16 n;
  rng.fill(n);
  return n;
}

SessionResponse session_respond(const MasterSecret& master, const Nonce16& nonce,
                                Rng& rng, MasterSecret& session_out) {
  rng.fill(session_out);
  Key16 iv{};
  SessionResponse r;
  r.ciphertext = cbc_encrypt(session_enc_key(master), iv, session_out);
  Bytes bound;
  append(bound, nonce);
  append(bound, r.ciphertext);
  r.tag = mac_compute(session_mac_key(master), bound);
  return r;
}

std::optional<MasterSecret> session_complete(const MasterSecret& master,
                                             const Nonce16& nonce,
                                             const SessionResponse& response) {
  Bytes bound;
  append(bound, nonce);
  append(bound, response.ciphertext);
  if (!mac_verify(session_mac_key(master), bound, response.tag)) {
    return std::nullopt;
  }
  Key16 iv{};
  Bytes secret;
  try {
    secret = cbc_decrypt(session_enc_key(master), iv, response.ciphertext);
  } catch (const Error&) {
    return std::nullopt;
  }
  if (secret.size() != 32) return std::nullopt;
  return take<32>(secret);
}

}  // namespace sscada::p2p
