#include "sscada/aga.hpp"

#include "sscada/errors.hpp"

namespace sscada::aga {

namespace {

Key16 mask_block(const Key16& enc_key, uint32_t seq, uint32_t j) {
  Bytes pad;
  append_be32(pad, seq);
  append_be32(pad, j);
  pad.resize(16, 0);
  return aes_encrypt_block(enc_key, take<16>(pad));
}

Bytes mac_input(uint32_t seq, std::span<const uint8_t> plaintext) {
  Bytes in;
  append_be32(in, seq);
  append(in, plaintext);
  return in;
}

}  // namespace

Bytes Frame::serialize() const {
  Bytes out;
  append_be32(out, seq);
  append(out, blocks);
  append(out, tag);
  return out;
}

Frame Frame::parse(std::span<const uint8_t> wire) {
  if (wire.size() < 36 || (wire.size() - 20) % 16 != 0) {
    throw FrameError("AGA frame must be 4 + 16n + 16 bytes, n >= 1");
  }
  Frame f;
  f.seq = read_be32(wire, 0);
  f.blocks.assign(wire.begin() + 4, wire.end() - 16);
  f.tag = take<16>(wire, wire.size() - 16);
  return f;
}

const char* status_name(Status s) {
  switch (s) {
    case Status::ACCEPTED: return "ACCEPTED";
    case Status::SEQ_REJECTED: return "SEQ_REJECTED";
    case Status::MAC_FAILED: return "MAC_FAILED";
  }
  return "?";
}

Frame encrypt(SenderState& state, std::span<const uint8_t> plaintext) {
  if (plaintext.empty() || plaintext.size() % 16 != 0) {
    throw Error("plaintext must be a positive multiple of 16 bytes");
  }
  Frame f;
  f.seq = state.send_seq;
  f.blocks.reserve(plaintext.size());
  for (uint32_t j = 1; j <= plaintext.size() / 16; ++j) {
    Key16 mask = mask_block(state.enc_key, f.seq, j);
    Key16 p = take<16>(plaintext, 16 * (j - 1));
    for (int b = 0; b < 16; ++b) p[b] ^= mask[b];
    append(f.blocks, aes_encrypt_block(state.enc_key, p));
  }
  f.tag = mac_compute(state.mac_key, mac_input(f.seq, plaintext));
  state.send_seq += 1;
  return f;
}

Bytes decrypt_blocks(const Key16& enc_key, uint32_t seq,
                     std::span<const uint8_t> blocks) {
  if (blocks.empty() || blocks.size() % 16 != 0) {
    throw FrameError("cipher blocks must be a positive multiple of 16 bytes");
  }
  Bytes out;
  out.reserve(blocks.size());
  for (uint32_t j = 1; j <= blocks.size() / 16; ++j) {
    Key16 p = aes_decrypt_block(enc_key, take<16>(blocks, 16 * (j - 1)));
    Key16 mask = mask_block(enc_key, seq, j);
    for (int b = 0; b < 16; ++b) p[b] ^= mask[b];
    append(out, p);
  }
  return out;
}

ReceiveOutcome receive(ReceiverState& state, const Frame& frame) {
  if (frame.blocks.empty() || frame.blocks.size() % 16 != 0) {
    throw FrameError("malformed AGA frame");
  }
  ReceiveOutcome out;
  if (frame.seq <= state.recv_seq) {
    out.status = Status::SEQ_REJECTED;
    return out;
  }
  // Plaintext goes out the SCADA port block by block, before the tag check.
  out.delivered_plaintext = decrypt_blocks(state.enc_key, frame.seq, frame.blocks);
  if (mac_verify(state.mac_key, mac_input(frame.seq, out.delivered_plaintext),
                 frame.tag)) {
    out.status = Status::ACCEPTED;
    state.recv_seq = frame.seq;
  } else {
    // Error is only logged; recv_seq stays where it was.
    out.status = Status::MAC_FAILED;
  }
  return out;
}

ReceiveOutcome attack_replay(const std::vector<Frame>& transcript,
                             ReceiverState& receiver, size_t chosen,
                             bool tamper_tag) {
  if (chosen >= transcript.size()) throw Error("chosen frame not in transcript");
  Frame replayed = transcript[chosen];
  if (tamper_tag) replayed.tag[15] ^= 0x01;
  return receive(receiver, replayed);
}

ReceiveOutcome cross_direction_replay(const Frame& frame_from_a,
                                      ReceiverState& receiver_state_of_a) {
  return receive(receiver_state_of_a, frame_from_a);
}

}  // namespace sscada::aga
