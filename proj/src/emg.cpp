#include "sscada/emg.hpp"

#include <algorithm>

#include "sscada/errors.hpp"

namespace sscada::emg {

Digest commitment_hash(uint16_t msg_index, const Nonce16& nonce,
                       std::optional<uint64_t> expiry) {
  Bytes preimage;
  append_be16(preimage, msg_index);
  append(preimage, nonce);
  if (expiry) append_be64(preimage, *expiry);
  return prf_hash(preimage);
}

Bytes Table::serialize() const {
  Bytes out{kTableType};
  append_be16(out, u);
  append_be16(out, v);
  for (const Commitment& c : entries) {
    append(out, c.r);
    if (revised()) append_be64(out, *c.expiry);
  }
  return out;
}

Table Table::parse(std::span<const uint8_t> wire) {
  if (wire.size() < 5 || wire[0] != kTableType) {
    throw FrameError("commitment table header invalid");
  }
  Table t;
  t.u = read_be16(wire, 1);
  t.v = read_be16(wire, 3);
  size_t count = size_t(t.u) * t.v;
  if (count == 0) throw FrameError("commitment table must be non-empty");
  size_t basic_size = 5 + count * 32;
  size_t revised_size = 5 + count * 40;
  bool revised;
  if (wire.size() == basic_size) {
    revised = false;
  } else if (wire.size() == revised_size) {
    revised = true;
  } else {
    throw FrameError("commitment table length mismatch");
  }
  size_t off = 5;
  t.entries.resize(count);
  for (Commitment& c : t.entries) {
    c.r = take<32>(wire, off);
    off += 32;
    if (revised) {
      c.expiry = read_be64(wire, off);
      off += 8;
    }
  }
  return t;
}

Bytes Reveal::serialize() const {
  Bytes out{kRevealType};
  append_be16(out, msg_index);
  append_be16(out, use_index);
  append(out, nonce);
  if (expiry) append_be64(out, *expiry);
  return out;
}

Reveal Reveal::parse(std::span<const uint8_t> wire) {
  if ((wire.size() != 21 && wire.size() != 29) || wire[0] != kRevealType) {
    throw FrameError("emergency reveal length invalid");
  }
  Reveal r;
  r.msg_index = read_be16(wire, 1);
  r.use_index = read_be16(wire, 3);
  r.nonce = take<16>(wire, 5);
  if (wire.size() == 29) r.expiry = read_be64(wire, 21);
  return r;
}

std::pair<Sender, Table> emg_commit(Rng& rng, uint16_t u, uint16_t v,
                                    const std::vector<uint64_t>& expiry_grid) {
  if (u < 1 || v < 1) throw Error("u and v must be >= 1");
  bool revised = !expiry_grid.empty();
  if (revised) {
    if (expiry_grid.size() != size_t(u) * v) {
      throw Error("expiry grid must hold u*v entries");
    }
    for (uint16_t i = 0; i < u; ++i) {
      for (uint16_t j = 1; j < v; ++j) {
        if (expiry_grid[size_t(i) * v + j] <= expiry_grid[size_t(i) * v + j - 1]) {
          throw Error("expiries must strictly increase per message");
        }
      }
    }
  }

  Sender s;
  s.u = u;
  s.v = v;
  s.revised = revised;
  s.nonces.resize(size_t(u) * v);
  s.used.assign(size_t(u) * v, false);
  if (revised) s.expiries = expiry_grid;

  Table t;
  t.u = u;
  t.v = v;
  t.entries.resize(size_t(u) * v);
  for (uint16_t i = 1; i <= u; ++i) {
    for (uint16_t j = 1; j <= v; ++j) {
      size_t idx = size_t(i - 1) * v + (j - 1);
      rng.fill(s.nonces[idx]);
      std::optional<uint64_t> expiry;
      if (revised) expiry = expiry_grid[idx];
      t.entries[idx].r = commitment_hash(i, s.nonces[idx], expiry);
      t.entries[idx].expiry = expiry;
    }
  }
  return {std::move(s), std::move(t)};
}

void emg_install(Receiver& receiver, const Table& table) {
  receiver.table = table;  // previous generation gone with the assignment
}

Reveal emg_emit(Sender& sender, uint16_t msg_index, uint64_t now, Rng& rng,
                uint64_t est_tx) {
  if (msg_index < 1 || msg_index > sender.u) throw Error("message index out of range");
  size_t row = size_t(msg_index - 1) * sender.v;

  std::vector<uint16_t> unused;
  for (uint16_t j = 1; j <= sender.v; ++j) {
    if (!sender.used[row + (j - 1)]) unused.push_back(j);
  }
  if (unused.empty()) throw UsesExhausted("all uses spent for this message");

  uint16_t pick = 0;
  if (!sender.revised) {
    pick = unused[rng.below(unused.size())];
  } else {
    // Expiries increase with j, so the first qualifying unused slot has the
    // earliest window.
    for (uint16_t j : unused) {
      if (now + est_tx < sender.expiries[row + (j - 1)]) {
        pick = j;
        break;
      }
    }
    if (pick == 0) throw NoValidWindow("no commitment window still open");
  }

  size_t idx = row + (pick - 1);
  sender.used[idx] = true;
  Reveal r;
  r.msg_index = msg_index;
  r.use_index = pick;
  r.nonce = sender.nonces[idx];
  if (sender.revised) r.expiry = sender.expiries[idx];
  return r;
}

const char* accept_status_name(AcceptStatus s) {
  switch (s) {
    case AcceptStatus::ACCEPTED: return "ACCEPTED";
    case AcceptStatus::NO_MATCH: return "NO_MATCH";
    case AcceptStatus::ALREADY_USED: return "ALREADY_USED";
    case AcceptStatus::EXPIRED: return "EXPIRED";
  }
  return "?";
}

AcceptResult emg_accept(Receiver& receiver, const Reveal& reveal, uint64_t now) {
  if (!receiver.table) throw ProtocolError("no commitment table installed");
  AcceptResult out;
  Table& t = *receiver.table;
  if (reveal.msg_index < 1 || reveal.msg_index > t.u || reveal.use_index < 1 ||
      reveal.use_index > t.v) {
    out.status = AcceptStatus::NO_MATCH;
    return out;
  }
  Commitment& c = t.at(reveal.msg_index, reveal.use_index);
  Digest r = commitment_hash(reveal.msg_index, reveal.nonce, reveal.expiry);
  if (!constant_time_eq(r, c.r)) {
    out.status = AcceptStatus::NO_MATCH;
    return out;
  }
  if (c.used) {
    out.status = AcceptStatus::ALREADY_USED;
    return out;
  }
  if (c.expiry && now >= *c.expiry) {
    out.status = AcceptStatus::EXPIRED;
    return out;
  }
  c.used = true;
  out.status = AcceptStatus::ACCEPTED;
  append_be16(out.payload, reveal.msg_index);
  return out;
}

bool needs_recommit(const Sender& sender) {
  for (uint16_t i = 0; i < sender.u; ++i) {
    size_t unused = 0;
    for (uint16_t j = 0; j < sender.v; ++j) {
      if (!sender.used[size_t(i) * sender.v + j]) ++unused;
    }
    if (unused <= 1) return true;
  }
  return false;
}

std::vector<Bytes> fragment(std::span<const uint8_t> data, size_t max_chunk) {
  if (max_chunk == 0) throw Error("fragment size must be positive");
  size_t total = (data.size() + max_chunk - 1) / max_chunk;
  if (total == 0) total = 1;
  if (total > UINT16_MAX) throw Error("too many fragments");
  std::vector<Bytes> out;
  for (size_t seq = 0; seq < total; ++seq) {
    Bytes frag;
    append_be16(frag, static_cast<uint16_t>(seq));
    append_be16(frag, static_cast<uint16_t>(total));
    size_t begin = seq * max_chunk;
    size_t end = std::min(begin + max_chunk, data.size());
    append(frag, data.subspan(begin, end - begin));
    out.push_back(std::move(frag));
  }
  return out;
}

std::optional<Bytes> Reassembler::feed(std::span<const uint8_t> frag) {
  if (frag.size() < 4) throw FrameError("fragment header truncated");
  uint16_t seq = read_be16(frag, 0);
  uint16_t total = read_be16(frag, 2);
  if (total == 0 || seq >= total) throw FrameError("fragment indices invalid");
  if (parts_.empty()) {
    parts_.resize(total);
  } else if (parts_.size() != total) {
    throw FrameError("fragment total changed mid-stream");
  }
  Bytes body(frag.begin() + 4, frag.end());
  if (parts_[seq]) {
    if (*parts_[seq] != body) throw FrameError("conflicting fragment content");
    return std::nullopt;  // duplicate, ignore
  }
  parts_[seq] = std::move(body);
  ++received_;
  if (received_ < parts_.size()) return std::nullopt;
  Bytes out;
  for (const auto& p : parts_) append(out, *p);
  parts_.clear();
  received_ = 0;
  return out;
}

}  // namespace sscada::emg
