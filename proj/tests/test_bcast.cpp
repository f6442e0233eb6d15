#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "reference_crypto.hpp"
#include "sscada/bcast.hpp"
#include "sscada/errors.hpp"
#include "sscada/rng.hpp"

using namespace sscada;
using namespace sscada::bcast;

namespace {

Key32 seed_bytes(uint8_t fill) {
  Key32 s;
  s.fill(fill);
  return s;
}

// t0=100, delta=10 ticks, d=2, chain of 20.
Schedule small_schedule() { return Schedule{100, 10, 2, 20}; }

SenderState small_sender() {
  return make_sender(seed_bytes(0x33), small_schedule());
}

ReceiverState bootstrap_at_zero(const SenderState& s) {
  return make_receiver(s.chain[0], s.schedule);
}

}  // namespace

TEST_CASE("interval arithmetic") {
  Schedule s{100, 10, 2, 20};
  CHECK(interval_of(s, 100) == 0);
  CHECK(interval_of(s, 109) == 0);
  CHECK(interval_of(s, 110) == 1);
  CHECK(interval_of(s, 179) == 7);  // 7.9 intervals floors to 7
  CHECK_THROWS_AS(interval_of(s, 99), Error);
}

TEST_CASE("schedule validation") {
  CHECK_THROWS_AS(make_sender(seed_bytes(1), Schedule{0, 0, 1, 5}), Error);
  CHECK_THROWS_AS(make_sender(seed_bytes(1), Schedule{0, 5, 0, 5}), Error);
  CHECK_THROWS_AS(make_sender(seed_bytes(1), Schedule{0, 5, 1, 0}), Error);
}

TEST_CASE("interval mac key is domain separated and injective in practice") {
  SenderState s = small_sender();
  std::set<std::string> keys;
  for (const ChainKey& ck : s.chain) {
    Key32 mk = interval_mac_key(ck.bytes);
    CHECK(mk != ck.bytes);
    CHECK(interval_mac_key(ck.bytes) == mk);
    keys.insert(to_hex(mk));
  }
  CHECK(keys.size() == s.chain.size());

  // Derivation cross-checked against the independent HMAC.
  auto ref = refcrypto::hmac_sha256(
      refcrypto::Bytes(s.chain[3].bytes.begin(), s.chain[3].bytes.end()),
      refcrypto::Bytes{0x6D});
  CHECK(std::equal(ref.begin(), ref.end(),
                   interval_mac_key(s.chain[3].bytes).begin()));
}

TEST_CASE("send picks the key d intervals ahead") {
  SenderState s = small_sender();
  // Interval 3 runs ticks 130..139.
  Packet p = bcast_send(s, 135, to_bytes("shutdown-prep"));
  CHECK(p.interval == 3);
  Bytes data;
  append_be32(data, 3);
  append(data, to_bytes("shutdown-prep"));
  CHECK(mac_verify(interval_mac_key(s.chain[5].bytes), data, p.tag));
  CHECK_FALSE(mac_verify(interval_mac_key(s.chain[4].bytes), data, p.tag));

  // Same interval, two payloads: same key, different tags.
  Packet q = bcast_send(s, 139, to_bytes("other"));
  CHECK(q.interval == 3);
  CHECK(q.tag != p.tag);
}

TEST_CASE("send boundary at the end of the chain") {
  SenderState s = small_sender();  // n=20, d=2
  // Interval 18 = ticks 280..289: 18+2 = 20 = n, last usable.
  CHECK(bcast_send(s, 285, to_bytes("last")).interval == 18);
  CHECK_THROWS_AS(bcast_send(s, 295, to_bytes("x")), ChainExhausted);
}

TEST_CASE("disclosure returns the interval key") {
  SenderState s = small_sender();
  Disclosure d0 = bcast_disclose(s, 100);
  CHECK(d0.interval == 0);
  CHECK(d0.key == s.chain[0].bytes);
  Disclosure d5 = bcast_disclose(s, 155);
  CHECK(d5.interval == 5);
  CHECK(d5.key == s.chain[5].bytes);
  CHECK(chain_verify(s.chain[0], ChainKey{d5.key, 5}));
  CHECK(bcast_disclose(s, 300).interval == 20);
  CHECK_THROWS_AS(bcast_disclose(s, 310), ChainExhausted);
}

TEST_CASE("receiver buffers fresh packets and rejects late ones") {
  SenderState s = small_sender();
  ReceiverState r = bootstrap_at_zero(s);

  Packet p = bcast_send(s, 135, to_bytes("cmd"));  // interval 3, key due at I_5
  CHECK(bcast_receive_packet(r, 137, p) == PacketVerdict::BUFFERED);
  CHECK(r.buffer.size() == 1);

  // At tick 150 (interval 5) the MAC key is being disclosed.
  CHECK(bcast_receive_packet(r, 150, p) ==
        PacketVerdict::REJECTED_KEY_DISCLOSED);
  CHECK(bcast_receive_packet(r, 990, p) ==
        PacketVerdict::REJECTED_KEY_DISCLOSED);
  CHECK(r.buffer.size() == 1);
}

TEST_CASE("receiver rejects a packet whose key it already verified") {
  SenderState s = small_sender();
  ReceiverState r = bootstrap_at_zero(s);
  // Receiver clock stuck early, but it has already accepted K_5.
  REQUIRE(bcast_receive_key(r, bcast_disclose(s, 155)).status ==
          KeyResult::Status::ACCEPTED);
  Packet p = bcast_send(s, 135, to_bytes("late"));  // needs K_5
  CHECK(bcast_receive_packet(r, 101, p) ==
        PacketVerdict::REJECTED_KEY_DISCLOSED);
}

TEST_CASE("packets arriving before t0 buffer safely") {
  SenderState s = small_sender();
  ReceiverState r = bootstrap_at_zero(s);
  Packet p = bcast_send(s, 100, to_bytes("early bird"));
  // Receiver clock offset puts its arrival before the schedule start.
  CHECK(bcast_receive_packet(r, 95, p) == PacketVerdict::BUFFERED);
}

TEST_CASE("buffer bound enforced") {
  SenderState s = small_sender();
  ReceiverState r = bootstrap_at_zero(s);
  Packet p = bcast_send(s, 100, to_bytes("fill"));
  for (size_t i = 0; i < kReceiverBufferLimit; ++i) {
    REQUIRE(bcast_receive_packet(r, 100, p) == PacketVerdict::BUFFERED);
  }
  CHECK_THROWS_AS(bcast_receive_packet(r, 100, p), BufferOverflow);
}

TEST_CASE("disclosure authenticates buffered packets") {
  SenderState s = small_sender();
  ReceiverState r = bootstrap_at_zero(s);

  Packet p = bcast_send(s, 132, to_bytes("open relay"));
  REQUIRE(bcast_receive_packet(r, 133, p) == PacketVerdict::BUFFERED);

  // Keys K_1..K_4 arrive one by one; nothing flushes until K_5.
  for (uint64_t t : {110, 120, 130, 140}) {
    KeyResult kr = bcast_receive_key(r, bcast_disclose(s, t));
    REQUIRE(kr.status == KeyResult::Status::ACCEPTED);
    REQUIRE(kr.flushed.empty());
  }
  KeyResult kr = bcast_receive_key(r, bcast_disclose(s, 150));
  REQUIRE(kr.status == KeyResult::Status::ACCEPTED);
  REQUIRE(kr.flushed.size() == 1);
  CHECK(kr.flushed[0].classification == Classification::AUTHENTIC);
  CHECK(kr.flushed[0].payload == to_bytes("open relay"));
  CHECK(kr.flushed[0].interval == 3);
  CHECK(r.buffer.empty());
  CHECK(r.latest_key.index == 5);
}

TEST_CASE("skipped disclosure still flushes older intervals") {
  SenderState s = small_sender();
  ReceiverState r = bootstrap_at_zero(s);

  Packet p3 = bcast_send(s, 135, to_bytes("from I3"));  // needs K_5
  Packet p4 = bcast_send(s, 145, to_bytes("from I4"));  // needs K_6
  REQUIRE(bcast_receive_packet(r, 136, p3) == PacketVerdict::BUFFERED);
  REQUIRE(bcast_receive_packet(r, 146, p4) == PacketVerdict::BUFFERED);

  // K_5 lost; K_6 arrives. chain_verify bridges the gap and both flush.
  KeyResult kr = bcast_receive_key(r, bcast_disclose(s, 160));
  REQUIRE(kr.status == KeyResult::Status::ACCEPTED);
  REQUIRE(kr.flushed.size() == 2);
  CHECK(kr.flushed[0].classification == Classification::AUTHENTIC);
  CHECK(kr.flushed[1].classification == Classification::AUTHENTIC);
  CHECK(r.latest_key.index == 6);
}

TEST_CASE("forged packets classify as FORGED") {
  SenderState s = small_sender();
  ReceiverState r = bootstrap_at_zero(s);

  Packet genuine = bcast_send(s, 132, to_bytes("real"));
  Packet forged = genuine;
  forged.payload = to_bytes("fake");  // tag no longer matches
  Packet flipped = genuine;
  flipped.tag[0] ^= 1;

  REQUIRE(bcast_receive_packet(r, 133, genuine) == PacketVerdict::BUFFERED);
  REQUIRE(bcast_receive_packet(r, 133, forged) == PacketVerdict::BUFFERED);
  REQUIRE(bcast_receive_packet(r, 133, flipped) == PacketVerdict::BUFFERED);

  KeyResult kr = bcast_receive_key(r, bcast_disclose(s, 150));
  REQUIRE(kr.flushed.size() == 3);
  CHECK(kr.flushed[0].classification == Classification::AUTHENTIC);
  CHECK(kr.flushed[1].classification == Classification::FORGED);
  CHECK(kr.flushed[2].classification == Classification::FORGED);
}

TEST_CASE("bogus and stale disclosures leave the receiver unchanged") {
  SenderState s = small_sender();
  ReceiverState r = bootstrap_at_zero(s);
  REQUIRE(bcast_receive_key(r, bcast_disclose(s, 130)).status ==
          KeyResult::Status::ACCEPTED);
  REQUIRE(r.latest_key.index == 3);

  SplitMix64 rng(5);
  for (int i = 0; i < 100; ++i) {
    Disclosure bogus;
    bogus.interval = 4 + uint32_t(rng.below(10));
    rng.fill(bogus.key);
    REQUIRE(bcast_receive_key(r, bogus).status == KeyResult::Status::REJECTED);
    REQUIRE(r.latest_key.index == 3);
  }

  CHECK(bcast_receive_key(r, bcast_disclose(s, 130)).status ==
        KeyResult::Status::STALE);
  CHECK(bcast_receive_key(r, bcast_disclose(s, 110)).status ==
        KeyResult::Status::STALE);
  CHECK(r.latest_key.index == 3);
}

TEST_CASE("latest key index strictly increases over a run") {
  SenderState s = small_sender();
  ReceiverState r = bootstrap_at_zero(s);
  uint32_t prev = r.latest_key.index;
  for (uint64_t t = 110; t <= 300; t += 10) {
    KeyResult kr = bcast_receive_key(r, bcast_disclose(s, t));
    REQUIRE(kr.status == KeyResult::Status::ACCEPTED);
    REQUIRE(r.latest_key.index > prev);
    prev = r.latest_key.index;
  }
  CHECK(prev == 20);
}

TEST_CASE("loss-free run authenticates every packet after d boundaries") {
  SenderState s = small_sender();
  ReceiverState r = bootstrap_at_zero(s);
  size_t authentic = 0;
  for (uint64_t t = 100; t < 280; ++t) {
    if (t % 10 == 5) {
      Packet p = bcast_send(s, t, to_bytes("tick"));
      REQUIRE(bcast_receive_packet(r, t, p) == PacketVerdict::BUFFERED);
    }
    if (t % 10 == 0 && t > 100) {
      KeyResult kr = bcast_receive_key(r, bcast_disclose(s, t));
      for (const FlushedPacket& f : kr.flushed) {
        REQUIRE(f.classification == Classification::AUTHENTIC);
        ++authentic;
      }
    }
  }
  // Final keys flush the tail.
  for (uint64_t t : {280, 290, 300}) {
    for (const FlushedPacket& f :
         bcast_receive_key(r, bcast_disclose(s, t)).flushed) {
      REQUIRE(f.classification == Classification::AUTHENTIC);
      ++authentic;
    }
  }
  CHECK(authentic == 18);  // one packet per interval 0..17
  CHECK(r.buffer.empty());
}

TEST_CASE("wire round trips") {
  SenderState s = small_sender();
  Packet p = bcast_send(s, 132, to_bytes("serialize me"));
  Bytes pw = p.serialize();
  Packet p2 = Packet::parse(pw);
  CHECK(p2.interval == p.interval);
  CHECK(p2.payload == p.payload);
  CHECK(p2.tag == p.tag);
  CHECK_THROWS_AS(Packet::parse(Bytes(10, 0)), FrameError);
  Bytes bad = pw;
  bad[0] = 0x00;
  CHECK_THROWS_AS(Packet::parse(bad), FrameError);
  Bytes truncated(pw.begin(), pw.end() - 1);
  CHECK_THROWS_AS(Packet::parse(truncated), FrameError);

  Disclosure d = bcast_disclose(s, 120);
  Disclosure d2 = Disclosure::parse(d.serialize());
  CHECK(d2.interval == d.interval);
  CHECK(d2.key == d.key);
  CHECK_THROWS_AS(Disclosure::parse(Bytes(36, 0)), FrameError);
}

TEST_CASE("bootstrap over the p2p channel") {
  SenderState s = small_sender();
  MasterSecret master{};
  master[1] = 9;
  auto ca = p2p::make_channel(master, p2p::Role::MASTER);
  auto cb = p2p::make_channel(master, p2p::Role::SLAVE);

  auto r = bcast_bootstrap(s, 145, ca, cb);  // interval 4
  REQUIRE(r.has_value());
  CHECK(r->latest_key.index == 4);
  CHECK(r->latest_key.bytes == s.chain[4].bytes);
  CHECK(r->schedule.t0 == 100);
  CHECK(r->schedule.delta == 10);
  CHECK(r->schedule.d == 2);
  CHECK(r->schedule.chain_length == 20);

  // Later disclosures verify against the bootstrap key.
  CHECK(bcast_receive_key(*r, bcast_disclose(s, 170)).status ==
        KeyResult::Status::ACCEPTED);

  // Tampered on the link: p2p rejects, nothing is built.
  p2p::Frame f = p2p::channel_send(ca, bootstrap_blob(s, 155));
  f.ciphertext[3] ^= 0x20;
  CHECK(p2p::channel_receive(cb, f).status != p2p::Status::ACCEPTED);

  Bytes blob = bootstrap_blob(s, 155);
  CHECK_THROWS_AS(bootstrap_from_blob(Bytes(60, 0)), FrameError);
  ReceiverState direct = bootstrap_from_blob(blob);
  CHECK(direct.latest_key.index == 5);
}
