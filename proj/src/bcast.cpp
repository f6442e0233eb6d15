#include "sscada/bcast.hpp"

#include <algorithm>

#include "sscada/errors.hpp"

namespace sscada::bcast {

namespace {

void validate(const Schedule& s) {
  if (s.delta == 0) throw Error("delta must be positive");
  if (s.d < 1) throw Error("disclosure delay must be >= 1");
  if (s.chain_length < 1) throw Error("chain length must be >= 1");
}

Bytes tag_data(uint32_t interval, std::span<const uint8_t> payload) {
  Bytes data;
  append_be32(data, interval);
  append(data, payload);
  return data;
}

}  // namespace

uint64_t interval_of(const Schedule& schedule, uint64_t now) {
  if (now < schedule.t0) throw Error("time precedes schedule start");
  return (now - schedule.t0) / schedule.delta;
}

Key32 interval_mac_key(const Key32& chain_key) {
  uint8_t label = 0x6D;
  return hmac_sha256(chain_key, std::span<const uint8_t>(&label, 1));
}

Bytes Packet::serialize() const {
  Bytes out{kPacketType};
  append_be32(out, interval);
  append_be16(out, static_cast<uint16_t>(payload.size()));
  append(out, payload);
  append(out, tag);
  return out;
}

Packet Packet::parse(std::span<const uint8_t> wire) {
  if (wire.size() < 23 || wire[0] != kPacketType) {
    throw FrameError("broadcast packet header invalid");
  }
  Packet p;
  p.interval = read_be32(wire, 1);
  uint16_t len = read_be16(wire, 5);
  if (wire.size() != size_t(7) + len + 16) {
    throw FrameError("broadcast packet length mismatch");
  }
  p.payload.assign(wire.begin() + 7, wire.begin() + 7 + len);
  p.tag = take<16>(wire, 7 + len);
  return p;
}

Bytes Disclosure::serialize() const {
  Bytes out{kDisclosureType};
  append_be32(out, interval);
  append(out, key);
  return out;
}

Disclosure Disclosure::parse(std::span<const uint8_t> wire) {
  if (wire.size() != 37 || wire[0] != kDisclosureType) {
    throw FrameError("key disclosure must be [0x4B][BE32 i][32-byte key]");
  }
  Disclosure d;
  d.interval = read_be32(wire, 1);
  d.key = take<32>(wire, 5);
  return d;
}

SenderState make_sender(const Key32& seed, const Schedule& schedule) {
  validate(schedule);
  SenderState s;
  s.schedule = schedule;
  s.chain = chain_generate(seed, schedule.chain_length);
  return s;
}

Packet bcast_send(const SenderState& state, uint64_t now,
                  std::span<const uint8_t> payload) {
  if (payload.size() > UINT16_MAX) throw Error("payload too large");
  uint64_t i = interval_of(state.schedule, now);
  if (i + state.schedule.d > state.schedule.chain_length) {
    throw ChainExhausted("no chain key left for this interval");
  }
  Packet p;
  p.interval = static_cast<uint32_t>(i);
  p.payload.assign(payload.begin(), payload.end());
  Key32 mac_key =
      interval_mac_key(state.chain[i + state.schedule.d].bytes);
  p.tag = mac_compute(mac_key, tag_data(p.interval, p.payload));
  return p;
}

Disclosure bcast_disclose(const SenderState& state, uint64_t now) {
  uint64_t i = interval_of(state.schedule, now);
  if (i > state.schedule.chain_length) {
    throw ChainExhausted("chain fully disclosed");
  }
  Disclosure d;
  d.interval = static_cast<uint32_t>(i);
  d.key = state.chain[i].bytes;
  return d;
}

ReceiverState make_receiver(const ChainKey& bootstrap_key,
                            const Schedule& schedule) {
  validate(schedule);
  ReceiverState r;
  r.latest_key = bootstrap_key;
  r.schedule = schedule;
  return r;
}

PacketVerdict bcast_receive_packet(ReceiverState& state, uint64_t now,
                                   const Packet& packet) {
  uint64_t due = uint64_t(packet.interval) + state.schedule.d;
  // Safety check: the MAC key K_{i+d} must not be disclosable yet, judged by
  // the local clock, nor already held via a verified disclosure. Before t0 no
  // key is public, so anything buffers.
  bool clock_says_disclosed =
      now >= state.schedule.t0 && interval_of(state.schedule, now) >= due;
  bool key_already_seen = state.latest_key.index >= due;
  if (clock_says_disclosed || key_already_seen) {
    return PacketVerdict::REJECTED_KEY_DISCLOSED;
  }
  if (state.buffer.size() >= kReceiverBufferLimit) {
    throw BufferOverflow("receiver packet buffer full");
  }
  state.buffer.push_back(packet);
  return PacketVerdict::BUFFERED;
}

KeyResult bcast_receive_key(ReceiverState& state, const Disclosure& disclosure) {
  KeyResult result;
  if (disclosure.interval <= state.latest_key.index) {
    result.status = KeyResult::Status::STALE;
    return result;
  }
  ChainKey candidate{disclosure.key, disclosure.interval};
  if (!chain_verify(state.latest_key, candidate)) {
    result.status = KeyResult::Status::REJECTED;
    return result;
  }
  state.latest_key = candidate;
  result.status = KeyResult::Status::ACCEPTED;

  // Flush everything whose MAC key is now derivable: interval + d <= v.
  // Walking the hash chain down from the disclosed key gives K_{i+d}.
  std::vector<Packet> keep;
  for (const Packet& p : state.buffer) {
    uint64_t needed = uint64_t(p.interval) + state.schedule.d;
    if (needed > disclosure.interval) {
      keep.push_back(p);
      continue;
    }
    Key32 key = disclosure.key;
    for (uint64_t step = disclosure.interval; step > needed; --step) {
      key = prf_hash(key);
    }
    FlushedPacket f;
    f.interval = p.interval;
    f.payload = p.payload;
    f.classification = mac_verify(interval_mac_key(key),
                                  tag_data(p.interval, p.payload), p.tag)
                           ? Classification::AUTHENTIC
                           : Classification::FORGED;
    result.flushed.push_back(std::move(f));
  }
  state.buffer = std::move(keep);
  return result;
}

Bytes bootstrap_blob(const SenderState& state, uint64_t now) {
  uint64_t i = interval_of(state.schedule, now);
  if (i > state.schedule.chain_length) {
    throw ChainExhausted("chain fully disclosed");
  }
  Bytes out{kBootstrapType};
  append_be32(out, static_cast<uint32_t>(i));
  append(out, state.chain[i].bytes);
  append_be64(out, state.schedule.t0);
  append_be64(out, state.schedule.delta);
  append_be32(out, state.schedule.d);
  append_be32(out, state.schedule.chain_length);
  return out;
}

ReceiverState bootstrap_from_blob(std::span<const uint8_t> blob) {
  if (blob.size() != 61 || blob[0] != kBootstrapType) {
    throw FrameError("bootstrap blob invalid");
  }
  ChainKey key;
  key.index = read_be32(blob, 1);
  key.bytes = take<32>(blob, 5);
  Schedule s;
  s.t0 = read_be64(blob, 37);
  s.delta = read_be64(blob, 45);
  s.d = read_be32(blob, 53);
  s.chain_length = read_be32(blob, 57);
  return make_receiver(key, s);
}

std::optional<ReceiverState> bcast_bootstrap(const SenderState& sender,
                                             uint64_t now,
                                             p2p::ChannelState& via_sender,
                                             p2p::ChannelState& via_receiver) {
  p2p::Frame f = p2p::channel_send(via_sender, bootstrap_blob(sender, now));
  p2p::DeliveryResult r = p2p::channel_receive(via_receiver, f);
  if (r.status != p2p::Status::ACCEPTED || !r.plaintext) return std::nullopt;
  return bootstrap_from_blob(*r.plaintext);
}

}  // namespace sscada::bcast
