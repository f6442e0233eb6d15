#pragma once

// Point-to-point secure channel: per-direction keys, a 128-bit send/receive
// counter pair serving as CBC IVs, and a counter-hash prefix so the receiver
// can tell which counter a frame was encrypted under without any counter
// bytes on the wire.

#include <compare>
#include <cstdint>
#include <optional>

#include "sscada/bytes.hpp"
#include "sscada/crypto.hpp"
#include "sscada/rng.hpp"

namespace sscada::p2p {

struct Counter128 {
  uint64_t hi = 0;
  uint64_t lo = 0;

  auto operator<=>(const Counter128&) const = default;

  std::array<uint8_t, 16> to_be_bytes() const;
  static Counter128 from_be_bytes(std::span<const uint8_t> b);

  bool is_max() const { return hi == UINT64_MAX && lo == UINT64_MAX; }
  void increment();                                 // caller checks is_max first
  std::optional<Counter128> plus(uint64_t k) const; // nullopt on wraparound
};

enum class Role { MASTER, SLAVE };
enum class Mode { M1, M2, M3 };

struct ChannelConfig {
  Mode mode = Mode::M2;
  uint32_t prefix_bits = 32;  // l; 32..128 in steps of 8
  bool mac_enabled = true;
  uint32_t trial_window = 8;  // W
};

struct ChannelState {
  DirectionKeys keys;
  Counter128 send_counter;
  Counter128 recv_counter;
  Role role = Role::MASTER;
  ChannelConfig config;
  std::optional<Nonce16> pending_sync_nonce;
  bool resync_needed = false;

  const Key16& send_enc_key() const;
  const Key32& send_mac_key() const;
  const Key16& recv_enc_key() const;
  const Key32& recv_mac_key() const;
};

// Throws Error when the config is out of range (l < 32, l > 128, l not a
// multiple of 8, W < 1).
ChannelState make_channel(const MasterSecret& master, Role role,
                          ChannelConfig config = {});

struct Frame {
  Bytes ciphertext;            // positive multiple of 16
  std::optional<MacTag> tag;   // present iff mac_enabled

  Bytes serialize() const;
  static Frame parse(std::span<const uint8_t> wire, bool mac_enabled);
};

enum class Status {
  ACCEPTED,
  PREFIX_REJECTED,
  MAC_FAILED_LOGGED,
  MAC_FAILED_SUPPRESSED,
};

const char* status_name(Status s);

struct DeliveryResult {
  std::optional<Bytes> plaintext;
  Status status = Status::PREFIX_REJECTED;
  Counter128 counter_used;
};

Frame channel_send(ChannelState& state, std::span<const uint8_t> message);
DeliveryResult channel_receive(ChannelState& state, const Frame& frame);

struct AuthOnlyMessage {
  Bytes message;
  MacTag tag;
};

AuthOnlyMessage channel_send_auth_only(ChannelState& state,
                                       std::span<const uint8_t> message);
DeliveryResult channel_receive_auth_only(ChannelState& state,
                                         std::span<const uint8_t> message,
                                         std::span<const uint8_t> tag);

Bytes channel_passthrough(std::span<const uint8_t> message);

// Session-key handshake: initiator sends a fresh nonce, responder wraps a new
// session secret under keys derived from the long-term master, initiator
// unwraps and both sides re-derive direction keys from the session secret.
struct SessionResponse {
  Bytes ciphertext;
  MacTag tag;

  Bytes serialize() const;
  static SessionResponse parse(std::span<const uint8_t> wire);
};

Nonce16 session_initiate(Rng& rng);
SessionResponse session_respond(const MasterSecret& master, const Nonce16& nonce,
                                Rng& rng, MasterSecret& session_out);
std::optional<MasterSecret> session_complete(const MasterSecret& master,
                                             const Nonce16& nonce,
                                             const SessionResponse& response);

}  // namespace sscada::p2p
