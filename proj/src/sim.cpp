#include "sscada/sim.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <queue>
#include <set>
#include <sstream>
#include <tuple>
#include <variant>

#include "sscada/aga.hpp"
#include "sscada/bcast.hpp"
#include "sscada/emg.hpp"
#include "sscada/errors.hpp"
#include "sscada/p2p.hpp"
#include "sscada/rng.hpp"
#include "sscada/sync.hpp"

namespace sscada::sim {

namespace {

constexpr uint8_t kAgaType = 0x41;
constexpr uint8_t kP2pDataType = 0x44;
constexpr uint8_t kAuthOnlyType = 0x4D;
constexpr uint8_t kPassthroughType = 0x50;

uint16_t crc16(std::span<const uint8_t> data) {
  uint16_t crc = 0xFFFF;  // CCITT-FALSE
  for (uint8_t b : data) {
    crc ^= static_cast<uint16_t>(b) << 8;
    for (int i = 0; i < 8; ++i) {
      crc = (crc & 0x8000) ? static_cast<uint16_t>((crc << 1) ^ 0x1021)
                           : static_cast<uint16_t>(crc << 1);
    }
  }
  return crc;
}

std::string ctr_str(const p2p::Counter128& c) {
  if (c.hi == 0) return std::to_string(c.lo);
  return std::to_string(c.hi) + ":" + std::to_string(c.lo);
}

std::string join_verdict(const std::string& base,
                         const std::vector<std::string>& notes) {
  if (notes.empty()) return base;
  std::string s = base + "(";
  for (size_t i = 0; i < notes.size(); ++i) {
    if (i) s += ",";
    s += notes[i];
  }
  return s + ")";
}

const char* error_tag(const Error& e) {
  if (dynamic_cast<const CounterExhausted*>(&e)) return "counter_exhausted";
  if (dynamic_cast<const ChainExhausted*>(&e)) return "chain_exhausted";
  if (dynamic_cast<const UsesExhausted*>(&e)) return "uses_exhausted";
  if (dynamic_cast<const NoValidWindow*>(&e)) return "no_valid_window";
  if (dynamic_cast<const BufferOverflow*>(&e)) return "buffer_overflow";
  if (dynamic_cast<const FrameError*>(&e)) return "frame";
  return "protocol";
}

bool rule_matches(const scn::AdversaryRule& r, const Bytes& frame,
                  const std::string& from) {
  if (r.match_type && (frame.empty() || frame[0] != *r.match_type)) return false;
  if (r.match_from && *r.match_from != from) return false;
  if (r.match_seq) {
    if (frame.size() < 5) return false;
    uint64_t seq = read_be32(frame, 1);
    if (seq < r.match_seq->first || seq > r.match_seq->second) return false;
  }
  return true;
}

}  // namespace

uint64_t clock_read(uint64_t now, const scn::Device& device) {
  if (device.clock_offset >= 0) return now + uint64_t(device.clock_offset);
  uint64_t back = uint64_t(-device.clock_offset);
  return now >= back ? now - back : 0;
}

ApplyResult adversary_apply(const std::vector<scn::AdversaryRule>& script,
                            AdversaryState& state, const Bytes& frame,
                            uint64_t now, const std::string& from) {
  if (state.hits.size() != script.size()) state.hits.assign(script.size(), 0);

  ApplyResult result;
  Bytes current = frame;
  bool dropped = false;
  uint64_t extra_delay = 0;
  bool was_delayed = false;

  for (size_t ri = 0; ri < script.size(); ++ri) {
    const scn::AdversaryRule& r = script[ri];
    if (!rule_matches(r, frame, from)) continue;
    uint64_t occurrence = ++state.hits[ri];
    if (r.match_count && (occurrence < r.match_count->first ||
                          occurrence > r.match_count->second)) {
      continue;
    }

    std::vector<std::string> notes;
    auto add_note = [&] {
      if (!r.note.empty()) notes.push_back("note:" + r.note);
    };

    switch (r.action) {
      case scn::ActionKind::DROP: {
        dropped = true;
        add_note();
        result.taps.push_back({now, current, join_verdict("DROPPED", notes)});
        break;
      }
      case scn::ActionKind::DELAY: {
        extra_delay += r.delay_ticks;
        was_delayed = true;
        notes.push_back("ticks:" + std::to_string(r.delay_ticks));
        add_note();
        result.taps.push_back({now, current, join_verdict("DELAYED", notes)});
        break;
      }
      case scn::ActionKind::FLIP_BIT: {
        if (!current.empty()) {
          int64_t bit = r.bit_offset;
          int64_t total = int64_t(current.size()) * 8;
          if (bit < 0) bit += total;
          if (bit >= 0 && bit < total) {
            current[size_t(bit / 8)] ^= uint8_t(1u << (bit % 8));
            notes.push_back("bit:" + std::to_string(bit));
          }
        }
        add_note();
        result.taps.push_back({now, current, join_verdict("FLIPPED", notes)});
        break;
      }
      case scn::ActionKind::RECORD: {
        auto& log = state.recordings[r.label];
        log.push_back(current);
        notes.push_back("label:" + r.label);
        notes.push_back("n:" + std::to_string(log.size()));
        add_note();
        result.taps.push_back({now, current, join_verdict("RECORDED", notes)});
        break;
      }
      case scn::ActionKind::REPLAY: {
        auto it = state.recordings.find(r.label);
        if (it == state.recordings.end() || r.replay_index < 1 ||
            r.replay_index > it->second.size()) {
          throw ScriptError("replay of unrecorded frame '" + r.label + "' #" +
                            std::to_string(r.replay_index));
        }
        Delivery d;
        d.deliver_at = now + r.after;
        d.bytes = it->second[r.replay_index - 1];
        d.replayed = true;
        notes.push_back("label:" + r.label);
        notes.push_back("n:" + std::to_string(r.replay_index));
        add_note();
        result.taps.push_back({now, d.bytes, join_verdict("REPLAYED", notes)});
        result.deliveries.push_back(std::move(d));
        break;
      }
      case scn::ActionKind::INJECT: {
        Delivery d;
        d.deliver_at = now + r.after;
        d.bytes = r.inject_bytes;
        d.injected = true;
        add_note();
        result.taps.push_back({now, d.bytes, join_verdict("INJECTED", notes)});
        result.deliveries.push_back(std::move(d));
        break;
      }
    }
  }

  if (!dropped) {
    Delivery d;
    d.deliver_at = now + extra_delay;
    d.bytes = std::move(current);
    d.delayed = was_delayed;
    result.deliveries.push_back(std::move(d));
  }
  return result;
}

std::string to_text(const Transcript& t) {
  std::ostringstream out;
  std::map<std::string, uint64_t> counts;
  for (const TranscriptEvent& e : t.events) {
    out << e.tick << "|" << e.actor << "|" << e.dir << "|" << to_hex(e.bytes)
        << "|" << e.verdict << "\n";
    counts[e.verdict.substr(0, e.verdict.find('('))]++;
  }
  out << "-- summary\n";
  for (const auto& [name, n] : counts) out << name << " " << n << "\n";
  return out.str();
}

namespace {

struct Event {
  uint64_t tick = 0;
  uint64_t order = 0;
  std::function<void()> fn;
};

struct EventAfter {
  bool operator()(const Event& a, const Event& b) const {
    return std::tie(a.tick, a.order) > std::tie(b.tick, b.order);
  }
};

class Sim {
 public:
  explicit Sim(const scn::Scenario& sc) : sc_(sc), rng_(sc.seed) {}

  Transcript run() {
    build();
    while (!q_.empty() && q_.top().tick <= sc_.tick_limit) {
      Event e = q_.top();
      q_.pop();
      now_ = e.tick;
      e.fn();
    }
    return std::move(tr_);
  }

 private:
  struct AgaEnd {
    aga::SenderState snd;
    aga::ReceiverState rcv;
  };
  struct AgaRt {
    std::map<std::string, AgaEnd> ends;
  };
  struct P2pRt {
    std::map<std::string, p2p::ChannelState> ends;
  };
  struct BufMeta {
    uint32_t interval = 0;
    Bytes payload;
    bool injected = false, replayed = false, delayed = false;
  };
  struct BcastRt {
    bcast::SenderState snd;
    std::map<std::string, bcast::ReceiverState> rcv;
    std::map<std::string, std::deque<BufMeta>> meta;
  };
  struct EmgRt {
    emg::Sender snd;
    std::map<std::string, emg::Receiver> rcv;
    std::map<std::string, emg::Reassembler> reasm;
  };
  struct ChRt {
    const scn::Channel* cfg = nullptr;
    std::variant<AgaRt, P2pRt, BcastRt, EmgRt> state;
  };

  const scn::Scenario& sc_;
  SplitMix64 rng_;
  Transcript tr_;
  uint64_t now_ = 0;
  uint64_t order_ = 0;
  std::priority_queue<Event, std::vector<Event>, EventAfter> q_;
  std::map<std::string, ChRt> ch_;
  std::map<const scn::Link*, AdversaryState> adv_;
  std::set<std::string> fresh_;

  void schedule(uint64_t tick, std::function<void()> fn) {
    q_.push({tick, order_++, std::move(fn)});
  }

  void log(uint64_t tick, const std::string& actor, const std::string& dir,
           Bytes bytes, std::string verdict) {
    tr_.events.push_back({tick, actor, dir, std::move(bytes), std::move(verdict)});
  }

  uint64_t dev_clock(const std::string& id) const {
    return clock_read(now_, *scn::find_device(sc_, id));
  }

  // True when this (channel, device, token) was delivered before; marks it.
  bool stale(const std::string& ch, const std::string& dev,
             const std::string& token) {
    return !fresh_.insert(ch + "|" + dev + "|" + token).second;
  }

  void meta_notes(std::vector<std::string>& notes, const Delivery& meta,
                  bool is_stale) {
    if (is_stale) notes.push_back("stale");
    if (meta.injected) notes.push_back("injected");
    if (meta.replayed) notes.push_back("replayed");
    if (meta.delayed) notes.push_back("delayed");
  }

  void build() {
    auto problems = scn::validate(sc_);
    if (!problems.empty()) {
      std::string msg = "scenario invalid:";
      for (const std::string& p : problems) msg += "\n  " + p;
      throw Error(msg);
    }

    for (const scn::Channel& c : sc_.channels) {
      ChRt rt;
      rt.cfg = &c;
      switch (c.type) {
        case scn::ChannelType::AGA: {
          AgaRt a;
          Key16 ek = take<16>(c.enc_key);
          Key32 mk = take<32>(c.mac_key);
          a.ends[c.device_a] = {aga::SenderState{ek, mk, 1},
                                aga::ReceiverState{ek, mk, 0}};
          a.ends[c.device_b] = {aga::SenderState{ek, mk, 1},
                                aga::ReceiverState{ek, mk, 0}};
          rt.state = std::move(a);
          break;
        }
        case scn::ChannelType::P2P: {
          P2pRt p;
          MasterSecret master = take<32>(c.master_secret);
          p2p::ChannelConfig cfg;
          cfg.mode = c.mode == "m1"   ? p2p::Mode::M1
                     : c.mode == "m3" ? p2p::Mode::M3
                                      : p2p::Mode::M2;
          cfg.prefix_bits = c.prefix_bits;
          cfg.mac_enabled = c.mac_enabled;
          cfg.trial_window = c.window;
          p.ends[c.device_a] = p2p::make_channel(master, p2p::Role::MASTER, cfg);
          p.ends[c.device_b] = p2p::make_channel(master, p2p::Role::SLAVE, cfg);
          rt.state = std::move(p);
          break;
        }
        case scn::ChannelType::BROADCAST: {
          BcastRt b;
          bcast::Schedule sch{c.t0, c.delta, c.d, c.chain_length};
          b.snd = bcast::make_sender(take<32>(c.chain_seed), sch);
          for (const std::string& r : c.receivers) {
            b.rcv.emplace(r, bcast::make_receiver(b.snd.chain[0], sch));
          }
          rt.state = std::move(b);
          break;
        }
        case scn::ChannelType::EMERGENCY_BASIC:
        case scn::ChannelType::EMERGENCY_REVISED: {
          EmgRt e;
          auto [snd, table] = emg::emg_commit(rng_, c.u, c.v, c.expiries);
          snd.generation = 1;
          table.generation = 1;
          e.snd = std::move(snd);
          for (const std::string& r : c.receivers) {
            emg::Receiver rcv;
            emg::emg_install(rcv, table);
            e.rcv.emplace(r, std::move(rcv));
          }
          rt.state = std::move(e);
          break;
        }
      }
      ch_.emplace(c.id, std::move(rt));
    }

    for (const scn::TrafficAction& a : sc_.traffic) {
      schedule(a.tick, [this, &a] { do_traffic(a); });
    }

    for (const scn::Channel& c : sc_.channels) {
      if (c.type != scn::ChannelType::BROADCAST || !c.auto_disclose) continue;
      const scn::Device* snd = scn::find_device(sc_, c.sender);
      for (uint64_t j = c.d; j <= c.chain_length; ++j) {
        int64_t g = int64_t(c.t0 + j * c.delta) - snd->clock_offset;
        if (g < 0) continue;
        if (uint64_t(g) > sc_.tick_limit) break;
        std::string id = c.id;
        schedule(uint64_t(g), [this, id] { do_disclose(id); });
      }
    }
  }

  // ---- transmission -------------------------------------------------------

  void transmit(const std::string& from, const std::string& to,
                const Bytes& bytes) {
    const scn::Link* lk = scn::find_link(sc_, from, to);
    uint64_t base = now_ + lk->latency;
    if (lk->loss_rate > 0.0 && rng_.next_unit() < lk->loss_rate) {
      Bytes copy = bytes;
      schedule(base, [this, to, copy] { log(now_, to, "rx", copy, "LOST"); });
      return;
    }
    ApplyResult ar =
        adversary_apply(lk->adversary, adv_[lk], bytes, base, from);
    for (const Tap& t : ar.taps) {
      schedule(t.tick, [this, t] { log(now_, "adversary", "mitm", t.bytes, t.verdict); });
    }
    for (const Delivery& d : ar.deliveries) {
      schedule(d.deliver_at, [this, from, to, d] { arrive(from, to, d); });
    }
  }

  void fanout(const std::string& from, const std::vector<std::string>& tos,
              const Bytes& bytes) {
    for (const std::string& to : tos) transmit(from, to, bytes);
  }

  // ---- traffic actions ----------------------------------------------------

  void do_traffic(const scn::TrafficAction& a) {
    ChRt& rt = ch_.at(a.channel);
    const scn::Channel& cfg = *rt.cfg;
    try {
      if (a.verb == "send" && cfg.type == scn::ChannelType::AGA) {
        auto& end = std::get<AgaRt>(rt.state).ends.at(a.device);
        aga::Frame f = aga::encrypt(end.snd, a.payload);
        Bytes wire{kAgaType};
        append(wire, f.serialize());
        log(now_, a.device, "tx", wire, "SENT(seq:" + std::to_string(f.seq) + ")");
        transmit(a.device, peer_of(cfg, a.device), wire);
      } else if (a.verb == "send") {
        auto& st = std::get<P2pRt>(rt.state).ends.at(a.device);
        Bytes body = a.payload;
        if (cfg.mode == "m1") {
          append_be16(body, crc16(a.payload));
        }
        std::string ctr = ctr_str(st.send_counter);
        p2p::Frame f = p2p::channel_send(st, body);
        Bytes wire{kP2pDataType};
        append(wire, f.serialize());
        log(now_, a.device, "tx", wire, "SENT(ctr:" + ctr + ")");
        transmit(a.device, peer_of(cfg, a.device), wire);
      } else if (a.verb == "send_auth") {
        auto& st = std::get<P2pRt>(rt.state).ends.at(a.device);
        std::string ctr = ctr_str(st.send_counter);
        p2p::AuthOnlyMessage m = p2p::channel_send_auth_only(st, a.payload);
        Bytes wire{kAuthOnlyType};
        append_be16(wire, static_cast<uint16_t>(m.message.size()));
        append(wire, m.message);
        append(wire, m.tag);
        log(now_, a.device, "tx", wire, "SENT(ctr:" + ctr + ")");
        transmit(a.device, peer_of(cfg, a.device), wire);
      } else if (a.verb == "passthrough") {
        Bytes wire{kPassthroughType};
        append(wire, p2p::channel_passthrough(a.payload));
        log(now_, a.device, "tx", wire, "SENT");
        transmit(a.device, peer_of(cfg, a.device), wire);
      } else if (a.verb == "sync") {
        auto& st = std::get<P2pRt>(rt.state).ends.at(a.device);
        sync::Request req = sync::sync_initiate(st, rng_);
        Bytes wire = req.serialize();
        log(now_, a.device, "tx", wire, "SYNC_REQUESTED");
        transmit(a.device, peer_of(cfg, a.device), wire);
      } else if (a.verb == "bcast") {
        auto& b = std::get<BcastRt>(rt.state);
        bcast::Packet p = bcast_send(b.snd, dev_clock(a.device), a.payload);
        Bytes wire = p.serialize();
        log(now_, a.device, "tx", wire,
            "SENT(i:" + std::to_string(p.interval) + ")");
        fanout(a.device, cfg.receivers, wire);
      } else if (a.verb == "disclose") {
        do_disclose(a.channel);
      } else if (a.verb == "emit") {
        auto& e = std::get<EmgRt>(rt.state);
        emg::Reveal r = emg::emg_emit(e.snd, a.msg_index, dev_clock(a.device),
                                      rng_, cfg.est_tx);
        Bytes wire = r.serialize();
        log(now_, a.device, "tx", wire,
            "EMG_REVEAL(i:" + std::to_string(r.msg_index) +
                ",j:" + std::to_string(r.use_index) + ")");
        fanout(a.device, cfg.receivers, wire);
      } else if (a.verb == "install") {
        do_install(a, rt);
      }
    } catch (const Error& err) {
      log(now_, a.device, "tx", a.payload,
          std::string("ERROR(") + error_tag(err) + ")");
    }
  }

  void do_disclose(const std::string& channel_id) {
    ChRt& rt = ch_.at(channel_id);
    const scn::Channel& cfg = *rt.cfg;
    auto& b = std::get<BcastRt>(rt.state);
    try {
      bcast::Disclosure d = bcast::bcast_disclose(b.snd, dev_clock(cfg.sender));
      Bytes wire = d.serialize();
      log(now_, cfg.sender, "tx", wire,
          "DISCLOSED(i:" + std::to_string(d.interval) + ")");
      fanout(cfg.sender, cfg.receivers, wire);
    } catch (const Error& err) {
      log(now_, cfg.sender, "tx", {},
          std::string("ERROR(") + error_tag(err) + ")");
    }
  }

  void do_install(const scn::TrafficAction& a, ChRt& rt) {
    const scn::Channel& cfg = *rt.cfg;
    auto& e = std::get<EmgRt>(rt.state);
    uint32_t next_gen = e.snd.generation + 1;
    auto [snd, table] = emg::emg_commit(rng_, cfg.u, cfg.v, cfg.expiries);
    snd.generation = next_gen;
    table.generation = next_gen;
    e.snd = std::move(snd);

    ChRt& via = ch_.at(cfg.via);
    auto& b = std::get<BcastRt>(via.state);
    std::vector<Bytes> frags =
        emg::fragment(table.serialize(), cfg.fragment_size);
    for (size_t k = 0; k < frags.size(); ++k) {
      try {
        bcast::Packet p =
            bcast::bcast_send(b.snd, dev_clock(a.device), frags[k]);
        Bytes wire = p.serialize();
        log(now_, a.device, "tx", wire,
            "SENT(i:" + std::to_string(p.interval) + ",frag:" +
                std::to_string(k + 1) + "/" + std::to_string(frags.size()) +
                ")");
        fanout(a.device, via.cfg->receivers, wire);
      } catch (const Error& err) {
        log(now_, a.device, "tx", {},
            std::string("ERROR(") + error_tag(err) + ")");
        return;
      }
    }
  }

  // ---- arrivals -----------------------------------------------------------

  std::string peer_of(const scn::Channel& cfg, const std::string& dev) const {
    return dev == cfg.device_a ? cfg.device_b : cfg.device_a;
  }

  ChRt* resolve(const std::string& from, const std::string& to, uint8_t type) {
    for (auto& [id, rt] : ch_) {
      const scn::Channel& c = *rt.cfg;
      bool pair = (c.device_a == from && c.device_b == to) ||
                  (c.device_a == to && c.device_b == from);
      switch (type) {
        case kAgaType:
          if (c.type == scn::ChannelType::AGA && pair) return &rt;
          break;
        case kP2pDataType:
        case kAuthOnlyType:
        case kPassthroughType:
        case sync::kRequestType:
        case sync::kResponseType:
          if (c.type == scn::ChannelType::P2P && pair) return &rt;
          break;
        case bcast::kPacketType:
        case bcast::kDisclosureType:
          if (c.type == scn::ChannelType::BROADCAST && c.sender == from &&
              std::find(c.receivers.begin(), c.receivers.end(), to) !=
                  c.receivers.end()) {
            return &rt;
          }
          break;
        case emg::kRevealType:
          if ((c.type == scn::ChannelType::EMERGENCY_BASIC ||
               c.type == scn::ChannelType::EMERGENCY_REVISED) &&
              c.sender == from &&
              std::find(c.receivers.begin(), c.receivers.end(), to) !=
                  c.receivers.end()) {
            return &rt;
          }
          break;
        default:
          break;
      }
    }
    return nullptr;
  }

  void arrive(const std::string& from, const std::string& to, const Delivery& d) {
    if (d.bytes.empty()) {
      log(now_, to, "rx", d.bytes, "MALFORMED(empty)");
      return;
    }
    ChRt* rt = resolve(from, to, d.bytes[0]);
    if (!rt) {
      log(now_, to, "rx", d.bytes, "NO_CHANNEL");
      return;
    }
    try {
      switch (d.bytes[0]) {
        case kAgaType: return arrive_aga(*rt, from, to, d);
        case kP2pDataType: return arrive_p2p(*rt, to, d);
        case kAuthOnlyType: return arrive_auth(*rt, to, d);
        case kPassthroughType: return arrive_passthrough(*rt, to, d);
        case sync::kRequestType: return arrive_sync_request(*rt, from, to, d);
        case sync::kResponseType: return arrive_sync_response(*rt, to, d);
        case bcast::kPacketType: return arrive_packet(*rt, to, d);
        case bcast::kDisclosureType: return arrive_disclosure(*rt, to, d);
        case emg::kRevealType: return arrive_reveal(*rt, to, d);
        default: log(now_, to, "rx", d.bytes, "UNKNOWN_TYPE"); return;
      }
    } catch (const FrameError&) {
      log(now_, to, "rx", d.bytes, "MALFORMED(frame)");
    } catch (const BufferOverflow&) {
      log(now_, to, "rx", d.bytes, "BUFFER_OVERFLOW");
    }
  }

  void arrive_aga(ChRt& rt, const std::string& from, const std::string& to,
                  const Delivery& d) {
    auto& end = std::get<AgaRt>(rt.state).ends.at(to);
    aga::Frame f =
        aga::Frame::parse(std::span(d.bytes).subspan(1));
    aga::ReceiveOutcome out = aga::receive(end.rcv, f);
    std::vector<std::string> notes{"seq:" + std::to_string(f.seq)};
    std::string base;
    switch (out.status) {
      case aga::Status::ACCEPTED: base = "ACCEPTED"; break;
      case aga::Status::SEQ_REJECTED: base = "SEQ_REJECTED"; break;
      case aga::Status::MAC_FAILED: base = "MAC_FAILED"; break;
    }
    bool delivered = out.status != aga::Status::SEQ_REJECTED;
    bool st = delivered &&
              stale(rt.cfg->id, to, "seq:" + std::to_string(f.seq));
    meta_notes(notes, d, st);
    log(now_, to, "rx", d.bytes, join_verdict(base, notes));
    (void)from;
  }

  void arrive_p2p(ChRt& rt, const std::string& to, const Delivery& d) {
    auto& st = std::get<P2pRt>(rt.state).ends.at(to);
    p2p::Frame f = p2p::Frame::parse(std::span(d.bytes).subspan(1),
                                     st.config.mac_enabled);
    p2p::DeliveryResult res = p2p::channel_receive(st, f);
    std::vector<std::string> notes;
    std::string base = p2p::status_name(res.status);
    bool delivered = res.plaintext.has_value();
    if (res.status != p2p::Status::PREFIX_REJECTED) {
      notes.push_back("ctr:" + ctr_str(res.counter_used));
    }
    if (delivered && rt.cfg->mode == "m1") {
      Bytes& body = *res.plaintext;
      if (body.size() >= 2 &&
          crc16(std::span(body).first(body.size() - 2)) ==
              read_be16(body, body.size() - 2)) {
        notes.push_back("crc:ok");
      } else {
        notes.push_back("crc:fail");
      }
    }
    bool st_mark = delivered &&
                   stale(rt.cfg->id, to, "ctr:" + ctr_str(res.counter_used));
    meta_notes(notes, d, st_mark);
    log(now_, to, "rx", d.bytes, join_verdict(base, notes));
  }

  void arrive_auth(ChRt& rt, const std::string& to, const Delivery& d) {
    auto& st = std::get<P2pRt>(rt.state).ends.at(to);
    std::span<const uint8_t> wire(d.bytes);
    if (wire.size() < 19) throw FrameError("auth-only frame too short");
    uint16_t len = read_be16(wire, 1);
    if (wire.size() != size_t(3) + len + 16) {
      throw FrameError("auth-only length mismatch");
    }
    auto msg = wire.subspan(3, len);
    auto tag = wire.subspan(3 + len, 16);
    p2p::DeliveryResult res = p2p::channel_receive_auth_only(st, msg, tag);
    std::vector<std::string> notes;
    std::string base = res.status == p2p::Status::ACCEPTED ? "AUTH_ACCEPTED"
                                                           : "AUTH_REJECTED";
    bool delivered = res.status == p2p::Status::ACCEPTED;
    if (delivered) notes.push_back("ctr:" + ctr_str(res.counter_used));
    bool st_mark = delivered &&
                   stale(rt.cfg->id, to, "ctr:" + ctr_str(res.counter_used));
    meta_notes(notes, d, st_mark);
    log(now_, to, "rx", d.bytes, join_verdict(base, notes));
  }

  void arrive_passthrough(ChRt& rt, const std::string& to, const Delivery& d) {
    std::vector<std::string> notes;
    meta_notes(notes, d, false);
    log(now_, to, "rx", d.bytes, join_verdict("PASSTHROUGH", notes));
    (void)rt;
  }

  void arrive_sync_request(ChRt& rt, const std::string& from,
                           const std::string& to, const Delivery& d) {
    auto& st = std::get<P2pRt>(rt.state).ends.at(to);
    sync::Request req = sync::Request::parse(d.bytes);
    sync::Response resp = sync::sync_respond(st, req);
    std::vector<std::string> notes;
    meta_notes(notes, d, false);
    log(now_, to, "rx", d.bytes, join_verdict("SYNC_RESPONDED", notes));
    Bytes wire = resp.serialize();
    log(now_, to, "tx", wire, "SYNC_RESPONSE(ctr:" + ctr_str(resp.counter) + ")");
    transmit(to, from, wire);
  }

  void arrive_sync_response(ChRt& rt, const std::string& to, const Delivery& d) {
    auto& st = std::get<P2pRt>(rt.state).ends.at(to);
    sync::Response resp = sync::Response::parse(d.bytes);
    std::vector<std::string> notes;
    std::string base;
    try {
      if (sync::sync_complete(st, resp)) {
        base = "SYNC_OK";
        notes.push_back("ctr:" + ctr_str(resp.counter));
      } else {
        base = "SYNC_REJECTED";
      }
    } catch (const ProtocolError&) {
      base = "SYNC_FAIL";
      notes.push_back("no_pending");
    }
    meta_notes(notes, d, false);
    log(now_, to, "rx", d.bytes, join_verdict(base, notes));
  }

  void arrive_packet(ChRt& rt, const std::string& to, const Delivery& d) {
    auto& b = std::get<BcastRt>(rt.state);
    bcast::Packet p = bcast::Packet::parse(d.bytes);
    bcast::PacketVerdict v =
        bcast::bcast_receive_packet(b.rcv.at(to), dev_clock(to), p);
    std::vector<std::string> notes{"i:" + std::to_string(p.interval)};
    std::string base;
    if (v == bcast::PacketVerdict::BUFFERED) {
      base = "BUFFERED";
      b.meta[to].push_back({p.interval, p.payload, d.injected, d.replayed, d.delayed});
    } else {
      base = "REJECTED_KEY_DISCLOSED";
    }
    meta_notes(notes, d, false);
    log(now_, to, "rx", d.bytes, join_verdict(base, notes));
  }

  void arrive_disclosure(ChRt& rt, const std::string& to, const Delivery& d) {
    auto& b = std::get<BcastRt>(rt.state);
    bcast::Disclosure disc = bcast::Disclosure::parse(d.bytes);
    bcast::KeyResult kr = bcast::bcast_receive_key(b.rcv.at(to), disc);
    std::vector<std::string> notes{"i:" + std::to_string(disc.interval)};
    std::string base;
    switch (kr.status) {
      case bcast::KeyResult::Status::ACCEPTED: base = "KEY_ACCEPTED"; break;
      case bcast::KeyResult::Status::STALE: base = "KEY_STALE"; break;
      case bcast::KeyResult::Status::REJECTED: base = "KEY_REJECTED"; break;
    }
    meta_notes(notes, d, false);
    log(now_, to, "rx", d.bytes, join_verdict(base, notes));

    for (const bcast::FlushedPacket& f : kr.flushed) {
      Delivery meta = take_meta(b.meta[to], f);
      std::vector<std::string> fnotes{"i:" + std::to_string(f.interval)};
      std::string fbase;
      bool authentic = f.classification == bcast::Classification::AUTHENTIC;
      bool st_mark = false;
      if (authentic) {
        fbase = "AUTHENTIC";
        st_mark = stale(rt.cfg->id, to,
                        "b:" + std::to_string(f.interval) + ":" + to_hex(f.payload));
      } else {
        fbase = "FORGED";
      }
      meta_notes(fnotes, meta, st_mark);
      log(now_, to, "rx", f.payload, join_verdict(fbase, fnotes));
      if (authentic) deliver_flush(rt, to, f);
    }
  }

  Delivery take_meta(std::deque<BufMeta>& metas, const bcast::FlushedPacket& f) {
    Delivery d;
    for (auto it = metas.begin(); it != metas.end(); ++it) {
      if (it->interval == f.interval && it->payload == f.payload) {
        d.injected = it->injected;
        d.replayed = it->replayed;
        d.delayed = it->delayed;
        metas.erase(it);
        return d;
      }
    }
    return d;
  }

  // Authentic broadcast payloads on a table-carrier channel feed the bound
  // emergency channel's reassembler.
  void deliver_flush(ChRt& rt, const std::string& to,
                     const bcast::FlushedPacket& f) {
    for (auto& [id, other] : ch_) {
      if (other.cfg->via != rt.cfg->id) continue;
      auto& e = std::get<EmgRt>(other.state);
      auto it = e.rcv.find(to);
      if (it == e.rcv.end()) continue;
      try {
        std::optional<Bytes> whole = e.reasm[to].feed(f.payload);
        if (whole) {
          emg::Table table = emg::Table::parse(*whole);
          emg::emg_install(it->second, table);
          e.reasm.erase(to);
          log(now_, to, "rx", {},
              "EMG_TABLE_INSTALLED(u:" + std::to_string(table.u) +
                  ",v:" + std::to_string(table.v) + ")");
        }
      } catch (const Error& err) {
        e.reasm.erase(to);
        log(now_, to, "rx", {},
            std::string("EMG_TABLE_REJECTED(") + error_tag(err) + ")");
      }
    }
  }

  void arrive_reveal(ChRt& rt, const std::string& to, const Delivery& d) {
    auto& e = std::get<EmgRt>(rt.state);
    emg::Reveal r = emg::Reveal::parse(d.bytes);
    emg::Receiver& rcv = e.rcv.at(to);
    std::vector<std::string> notes{"i:" + std::to_string(r.msg_index),
                                   "j:" + std::to_string(r.use_index)};
    std::string base;
    bool st_mark = false;
    try {
      emg::AcceptResult res = emg::emg_accept(rcv, r, dev_clock(to));
      switch (res.status) {
        case emg::AcceptStatus::ACCEPTED:
          base = "EMG_ACCEPTED";
          st_mark = stale(rt.cfg->id, to,
                          "e:" + std::to_string(r.msg_index) + ":" +
                              std::to_string(r.use_index) + ":" + to_hex(r.nonce));
          break;
        case emg::AcceptStatus::NO_MATCH: base = "EMG_NO_MATCH"; break;
        case emg::AcceptStatus::ALREADY_USED: base = "EMG_ALREADY_USED"; break;
        case emg::AcceptStatus::EXPIRED: base = "EMG_EXPIRED"; break;
      }
    } catch (const ProtocolError&) {
      base = "EMG_NO_TABLE";
    }
    meta_notes(notes, d, st_mark);
    log(now_, to, "rx", d.bytes, join_verdict(base, notes));
  }
};

}  // namespace

Transcript sim_run(const scn::Scenario& scenario) {
  Sim s(scenario);
  return s.run();
}

}  // namespace sscada::sim
