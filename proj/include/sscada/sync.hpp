#pragma once

// Two-message counter synchronization: initiator sends a fresh nonce, the
// responder answers with its current send counter bound to that nonce, and
// the initiator overwrites its receive counter. Each direction syncs
// independently; one full bootstrap runs the exchange both ways.

#include "sscada/bytes.hpp"
#include "sscada/p2p.hpp"
#include "sscada/rng.hpp"

namespace sscada::sync {

inline constexpr uint8_t kRequestType = 0x53;
inline constexpr uint8_t kResponseType = 0x54;

struct Request {
  Nonce16 nonce;

  Bytes serialize() const;  // [0x53][nonce]
  static Request parse(std::span<const uint8_t> wire);
};

struct Response {
  p2p::Counter128 counter;
  MacTag tag;

  Bytes serialize() const;  // [0x54][BE128 counter][tag]
  static Response parse(std::span<const uint8_t> wire);
};

Request sync_initiate(p2p::ChannelState& state, Rng& rng);
Response sync_respond(const p2p::ChannelState& state, const Request& request);

// True on tag match: recv_counter := response.counter, pending cleared,
// resync flag lowered. False leaves everything untouched (pending included,
// so the initiator may wait for another response or re-initiate).
bool sync_complete(p2p::ChannelState& state, const Response& response);

// Runs the exchange in both directions over a perfect link.
void sync_bootstrap(p2p::ChannelState& a, p2p::ChannelState& b, Rng& rng);

}  // namespace sscada::sync
