#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sscada/errors.hpp"
#include "sscada/sync.hpp"

using namespace sscada;
using namespace sscada::p2p;
using namespace sscada::sync;

namespace {

std::pair<ChannelState, ChannelState> make_pair() {
  MasterSecret master{};
  master[0] = 0x77;
  return {make_channel(master, Role::MASTER),
          make_channel(master, Role::SLAVE)};
}

}  // namespace

TEST_CASE("initiate draws fresh nonces and records them") {
  auto [a, b] = make_pair();
  (void)b;
  SplitMix64 rng(1);
  Request r1 = sync_initiate(a, rng);
  CHECK(a.pending_sync_nonce.has_value());
  CHECK(*a.pending_sync_nonce == r1.nonce);
  Request r2 = sync_initiate(a, rng);
  CHECK(r1.nonce != r2.nonce);
  CHECK(*a.pending_sync_nonce == r2.nonce);
}

TEST_CASE("respond binds the send counter to the nonce") {
  auto [a, b] = make_pair();
  SplitMix64 rng(2);
  b.send_counter = Counter128{0, 7};
  Request req = sync_initiate(a, rng);
  Response resp = sync_respond(b, req);
  CHECK(resp.counter == Counter128{0, 7});

  // Deterministic for the same request.
  Response again = sync_respond(b, req);
  CHECK(again.tag == resp.tag);
  CHECK(again.counter == resp.counter);

  // Tag verifies under the responder's send key only.
  Bytes bound;
  append(bound, req.nonce);
  append(bound, resp.counter.to_be_bytes());
  CHECK(mac_verify(b.send_mac_key(), bound, resp.tag));
  CHECK_FALSE(mac_verify(b.recv_mac_key(), bound, resp.tag));
}

TEST_CASE("complete restores agreement after desync") {
  auto [a, b] = make_pair();
  SplitMix64 rng(3);
  // B sent 5 frames A never saw.
  for (int i = 0; i < 5; ++i) channel_send(b, to_bytes("lost"));
  REQUIRE(a.recv_counter == Counter128{});

  Request req = sync_initiate(a, rng);
  Response resp = sync_respond(b, req);
  CHECK(sync_complete(a, resp));
  CHECK(a.recv_counter == b.send_counter);
  CHECK_FALSE(a.pending_sync_nonce.has_value());

  // Traffic flows immediately.
  Frame f = channel_send(b, to_bytes("fresh"));
  CHECK(channel_receive(a, f).status == Status::ACCEPTED);
}

TEST_CASE("stale or tampered responses are rejected without state change") {
  auto [a, b] = make_pair();
  SplitMix64 rng(4);

  Request old_req = sync_initiate(a, rng);
  Response old_resp = sync_respond(b, old_req);
  REQUIRE(sync_complete(a, old_resp));

  // New exchange; replaying the old response must fail (stale nonce).
  for (int i = 0; i < 3; ++i) channel_send(b, to_bytes("x"));
  Request req = sync_initiate(a, rng);
  Counter128 before = a.recv_counter;
  CHECK_FALSE(sync_complete(a, old_resp));
  CHECK(a.recv_counter == before);
  CHECK(a.pending_sync_nonce.has_value());  // retry still possible

  Response resp = sync_respond(b, req);
  Response bad = resp;
  bad.counter.lo ^= 1;
  CHECK_FALSE(sync_complete(a, bad));
  Response bad2 = resp;
  bad2.tag[5] ^= 0x40;
  CHECK_FALSE(sync_complete(a, bad2));
  CHECK(a.recv_counter == before);

  // The genuine response still lands.
  CHECK(sync_complete(a, resp));
  CHECK(a.recv_counter == b.send_counter);
}

TEST_CASE("complete without a pending exchange is a protocol error") {
  auto [a, b] = make_pair();
  SplitMix64 rng(5);
  Request req = sync_initiate(a, rng);
  Response resp = sync_respond(b, req);
  REQUIRE(sync_complete(a, resp));
  // Pending got cleared; the same response cannot be accepted twice.
  CHECK_THROWS_AS(sync_complete(a, resp), ProtocolError);
}

TEST_CASE("successful sync lowers the resync flag") {
  auto [a, b] = make_pair();
  SplitMix64 rng(6);
  a.resync_needed = true;
  Request req = sync_initiate(a, rng);
  REQUIRE(sync_complete(a, sync_respond(b, req)));
  CHECK_FALSE(a.resync_needed);
}

TEST_CASE("bootstrap aligns both directions") {
  auto [a, b] = make_pair();
  SplitMix64 rng(7);
  sync_bootstrap(a, b, rng);
  CHECK(a.recv_counter == b.send_counter);
  CHECK(b.recv_counter == a.send_counter);

  // After unidirectional traffic, bootstrap re-aligns.
  for (int i = 0; i < 10; ++i) channel_send(a, to_bytes("one way"));
  CHECK(b.recv_counter != a.send_counter);
  sync_bootstrap(a, b, rng);
  CHECK(a.recv_counter == b.send_counter);
  CHECK(b.recv_counter == a.send_counter);

  Frame f = channel_send(a, to_bytes("hello"));
  CHECK(channel_receive(b, f).status == Status::ACCEPTED);
  Frame g = channel_send(b, to_bytes("world"));
  CHECK(channel_receive(a, g).status == Status::ACCEPTED);
}

TEST_CASE("wire round trip and shape checks") {
  auto [a, b] = make_pair();
  SplitMix64 rng(8);
  Request req = sync_initiate(a, rng);
  Bytes rw = req.serialize();
  CHECK(rw.size() == 17);
  CHECK(rw[0] == kRequestType);
  CHECK(Request::parse(rw).nonce == req.nonce);

  b.send_counter = Counter128{1, 2};
  Response resp = sync_respond(b, req);
  Bytes sw = resp.serialize();
  CHECK(sw.size() == 33);
  CHECK(sw[0] == kResponseType);
  Response back = Response::parse(sw);
  CHECK(back.counter == resp.counter);
  CHECK(back.tag == resp.tag);
  CHECK(sync_complete(a, back));

  CHECK_THROWS_AS(Request::parse(Bytes(16, 0)), FrameError);
  CHECK_THROWS_AS(Request::parse(Bytes(17, 0)), FrameError);  // wrong type byte
  CHECK_THROWS_AS(Response::parse(Bytes(32, 0)), FrameError);
  Bytes wrong_type(33, 0);
  CHECK_THROWS_AS(Response::parse(wrong_type), FrameError);
}

TEST_CASE("responses are accepted at most once per nonce") {
  SplitMix64 rng(9);
  for (int run = 0; run < 200; ++run) {
    auto [a, b] = make_pair();
    // Random desync.
    uint64_t gap = rng.below(100);
    for (uint64_t i = 0; i < gap; ++i) channel_send(b, to_bytes("z"));

    Request req = sync_initiate(a, rng);
    Response resp = sync_respond(b, req);
    REQUIRE(sync_complete(a, resp));
    REQUIRE(a.recv_counter == b.send_counter);
    // Replays of the accepted response: pending is gone.
    REQUIRE_THROWS_AS(sync_complete(a, resp), ProtocolError);
    // Against a fresh nonce the old response never verifies.
    sync_initiate(a, rng);
    REQUIRE_FALSE(sync_complete(a, resp));
  }
}
