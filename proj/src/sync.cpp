#include "sscada/sync.hpp"

#include "sscada/errors.hpp"

namespace sscada::sync {

namespace {

Bytes bind(const Nonce16& nonce, const p2p::Counter128& counter) {
  Bytes data;
  append(data, nonce);
  append(data, counter.to_be_bytes());
  return data;
}

}  // namespace

Bytes Request::serialize() const {
  Bytes out{kRequestType};
  append(out, nonce);
  return out;
}

Request Request::parse(std::span<const uint8_t> wire) {
  if (wire.size() != 17 || wire[0] != kRequestType) {
    throw FrameError("sync request must be [0x53][16-byte nonce]");
  }
  return Request{take<16>(wire, 1)};
}

Bytes Response::serialize() const {
  Bytes out{kResponseType};
  append(out, counter.to_be_bytes());
  append(out, tag);
  return out;
}

Response Response::parse(std::span<const uint8_t> wire) {
  if (wire.size() != 33 || wire[0] != kResponseType) {
    throw FrameError("sync response must be [0x54][counter][tag]");
  }
  Response r;
  r.counter = p2p::Counter128::from_be_bytes(wire.subspan(1, 16));
  r.tag = take<16>(wire, 17);
  return r;
}

Request sync_initiate(p2p::ChannelState& state, Rng& rng) {
  Request req;
  rng.fill(req.nonce);
  state.pending_sync_nonce = req.nonce;
  return req;
}

Response sync_respond(const p2p::ChannelState& state, const Request& request) {
  Response resp;
  resp.counter = state.send_counter;
  resp.tag = mac_compute(state.send_mac_key(), bind(request.nonce, resp.counter));
  return resp;
}

bool sync_complete(p2p::ChannelState& state, const Response& response) {
  if (!state.pending_sync_nonce) {
    throw ProtocolError("no sync exchange in progress");
  }
  if (!mac_verify(state.recv_mac_key(),
                  bind(*state.pending_sync_nonce, response.counter),
                  response.tag)) {
    return false;
  }
  state.recv_counter = response.counter;
  state.pending_sync_nonce.reset();
  state.resync_needed = false;
  return true;
}

void sync_bootstrap(p2p::ChannelState& a, p2p::ChannelState& b, Rng& rng) {
  Request ra = sync_initiate(a, rng);
  if (!sync_complete(a, sync_respond(b, ra))) {
    throw ProtocolError("bootstrap failed in first direction");
  }
  Request rb = sync_initiate(b, rng);
  if (!sync_complete(b, sync_respond(a, rb))) {
    throw ProtocolError("bootstrap failed in second direction");
  }
}

}  // namespace sscada::sync
