#pragma once

// The draft AGA point-to-point protocol, implemented with its flaws intact:
// decrypted plaintext is forwarded before the MAC verdict, and a failed MAC
// only logs an error without advancing the receive sequence. Both together
// make the replay attack below work.

#include <cstdint>
#include <vector>

#include "sscada/bytes.hpp"
#include "sscada/crypto.hpp"

namespace sscada::aga {

struct SenderState {
  Key16 enc_key;
  Key32 mac_key;
  uint32_t send_seq = 1;
};

struct ReceiverState {
  Key16 enc_key;
  Key32 mac_key;
  uint32_t recv_seq = 0;
};

// Wire form: BE32(seq) | n x 16-byte cipher blocks | 16-byte tag.
struct Frame {
  uint32_t seq = 0;
  Bytes blocks;
  MacTag tag{};

  Bytes serialize() const;
  static Frame parse(std::span<const uint8_t> wire);  // FrameError on bad shape
};

enum class Status { ACCEPTED, SEQ_REJECTED, MAC_FAILED };

const char* status_name(Status s);

struct ReceiveOutcome {
  Bytes delivered_plaintext;  // non-empty for ACCEPTED and MAC_FAILED alike
  Status status = Status::SEQ_REJECTED;
};

// Block j (1-based) = ECB(p_j XOR ECB(BE32(seq) | BE32(j) | zeros8)).
// Plaintext must be a positive multiple of 16 bytes; the caller pads.
Frame encrypt(SenderState& state, std::span<const uint8_t> plaintext);

// Inverse of the block transform; no sequence or tag checks.
Bytes decrypt_blocks(const Key16& enc_key, uint32_t seq,
                     std::span<const uint8_t> blocks);

ReceiveOutcome receive(ReceiverState& state, const Frame& frame);

// Replays a logged frame against a receiver whose recv_seq was frozen by tag
// tampering. With tamper_tag the replayed copy keeps a flipped tag, so the
// receiver stays frozen and the replay can be repeated.
ReceiveOutcome attack_replay(const std::vector<Frame>& transcript,
                             ReceiverState& receiver, size_t chosen,
                             bool tamper_tag = false);

// Reflects a frame A sent back into A's own receive path. Accepted whenever
// both directions run on the same keys and the seq is fresh.
ReceiveOutcome cross_direction_replay(const Frame& frame_from_a,
                                      ReceiverState& receiver_state_of_a);

}  // namespace sscada::aga
