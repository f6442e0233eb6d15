#pragma once

// Authenticated broadcast with delayed key disclosure. The sender MACs
// interval-i traffic with material from chain key K_{i+d} and publishes K_i
// at t_i; receivers buffer packets until the matching key appears, first
// checking that the key could not already be public at arrival time.

#include <cstdint>
#include <vector>

#include "sscada/bytes.hpp"
#include "sscada/crypto.hpp"
#include "sscada/p2p.hpp"

namespace sscada::bcast {

inline constexpr uint8_t kPacketType = 0x42;
inline constexpr uint8_t kDisclosureType = 0x4B;
inline constexpr uint8_t kBootstrapType = 0x4E;
inline constexpr size_t kReceiverBufferLimit = 1024;

struct Schedule {
  uint64_t t0 = 0;
  uint64_t delta = 1;   // interval length in ticks, > 0
  uint32_t d = 1;       // disclosure delay in intervals, >= 1
  uint32_t chain_length = 0;  // n
};

// floor((now - t0) / delta); Error when now precedes t0.
uint64_t interval_of(const Schedule& schedule, uint64_t now);

// Domain-separated MAC key so a chain key is never used directly.
Key32 interval_mac_key(const Key32& chain_key);

struct Packet {
  uint32_t interval = 0;
  Bytes payload;
  MacTag tag{};

  Bytes serialize() const;  // [0x42][BE32 i][BE16 len][payload][tag]
  static Packet parse(std::span<const uint8_t> wire);
};

struct Disclosure {
  uint32_t interval = 0;
  Key32 key{};

  Bytes serialize() const;  // [0x4B][BE32 i][key]
  static Disclosure parse(std::span<const uint8_t> wire);
};

struct SenderState {
  std::vector<ChainKey> chain;  // K_0 .. K_n
  Schedule schedule;
};

SenderState make_sender(const Key32& seed, const Schedule& schedule);

Packet bcast_send(const SenderState& state, uint64_t now,
                  std::span<const uint8_t> payload);
Disclosure bcast_disclose(const SenderState& state, uint64_t now);

struct ReceiverState {
  ChainKey latest_key;
  Schedule schedule;
  std::vector<Packet> buffer;
};

ReceiverState make_receiver(const ChainKey& bootstrap_key,
                            const Schedule& schedule);

enum class PacketVerdict { BUFFERED, REJECTED_KEY_DISCLOSED };

PacketVerdict bcast_receive_packet(ReceiverState& state, uint64_t now,
                                   const Packet& packet);

enum class Classification { AUTHENTIC, FORGED };

struct FlushedPacket {
  uint32_t interval = 0;
  Bytes payload;
  Classification classification = Classification::FORGED;
};

struct KeyResult {
  enum class Status { ACCEPTED, REJECTED, STALE } status = Status::REJECTED;
  std::vector<FlushedPacket> flushed;  // only populated on ACCEPTED
};

KeyResult bcast_receive_key(ReceiverState& state, const Disclosure& disclosure);

// Bootstrap over an established p2p channel: the current interval's chain key
// plus the schedule, wrapped in one encrypted+authenticated message.
Bytes bootstrap_blob(const SenderState& state, uint64_t now);
ReceiverState bootstrap_from_blob(std::span<const uint8_t> blob);
std::optional<ReceiverState> bcast_bootstrap(const SenderState& sender,
                                             uint64_t now,
                                             p2p::ChannelState& via_sender,
                                             p2p::ChannelState& via_receiver);

}  // namespace sscada::bcast
