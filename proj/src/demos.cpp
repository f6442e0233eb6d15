#include "sscada/demos.hpp"

#include <sstream>

#include "sscada/bcast.hpp"
#include "sscada/errors.hpp"

namespace sscada::demos {

namespace {

Bytes hex(const char* s) { return from_hex(s); }

scn::Device device(std::string id, std::string role = "peer",
                   int64_t offset = 0) {
  scn::Device d;
  d.id = std::move(id);
  d.role = std::move(role);
  d.clock_offset = offset;
  return d;
}

scn::Link link(std::string a, std::string b) {
  scn::Link l;
  l.device_a = std::move(a);
  l.device_b = std::move(b);
  return l;
}

scn::AdversaryRule rule(uint8_t type, scn::ActionKind action) {
  scn::AdversaryRule r;
  r.match_type = type;
  r.action = action;
  return r;
}

scn::TrafficAction at(uint64_t tick, std::string dev, std::string verb,
                      std::string channel, Bytes payload = {}) {
  scn::TrafficAction a;
  a.tick = tick;
  a.device = std::move(dev);
  a.verb = std::move(verb);
  a.channel = std::move(channel);
  a.payload = std::move(payload);
  return a;
}

const char* kAgaEncKey = "000102030405060708090a0b0c0d0e0f";
const char* kAgaMacKey =
    "000102030405060708090a0b0c0d0e0f101112131415161718191a1b1c1d1e1f";
const char* kMasterSecret =
    "404142434445464748494a4b4c4d4e4f505152535455565758595a5b5c5d5e5f";
const char* kChainSeed =
    "7e7e7e7e7e7e7e7e7e7e7e7e7e7e7e7e7e7e7e7e7e7e7e7e7e7e7e7e7e7e7e7e";

// The replay script from the draft-AGA attack: log every frame, flip one tag
// bit on the first three so the receiver's sequence freezes, then resend the
// first logged original.
std::vector<scn::AdversaryRule> replay_script(uint8_t frame_type) {
  std::vector<scn::AdversaryRule> rules;

  scn::AdversaryRule log = rule(frame_type, scn::ActionKind::RECORD);
  log.match_from = "center";
  log.label = "log";
  log.note = "log-ciphertext";
  rules.push_back(log);

  scn::AdversaryRule flip = rule(frame_type, scn::ActionKind::FLIP_BIT);
  flip.match_from = "center";
  flip.match_count = {{1, 3}};
  flip.bit_offset = -1;
  flip.note = "freeze-recv-seq";
  rules.push_back(flip);

  scn::AdversaryRule replay = rule(frame_type, scn::ActionKind::REPLAY);
  replay.match_from = "center";
  replay.match_count = {{3, 3}};
  replay.label = "log";
  replay.replay_index = 1;
  replay.after = 5;
  replay.note = "replay-stale-command";
  rules.push_back(replay);

  return rules;
}

scn::Scenario aga_replay() {
  scn::Scenario s;
  s.seed = 1;
  s.tick_limit = 100;
  s.devices = {device("center", "master"), device("rtu1", "slave")};
  scn::Link l = link("center", "rtu1");
  l.adversary = replay_script(0x41);
  s.links = {l};

  scn::Channel ch;
  ch.id = "agalink";
  ch.type = scn::ChannelType::AGA;
  ch.device_a = "center";
  ch.device_b = "rtu1";
  ch.enc_key = hex(kAgaEncKey);
  ch.mac_key = hex(kAgaMacKey);
  s.channels = {ch};

  s.traffic = {
      at(10, "center", "send", "agalink", to_bytes("open-valve-07-ok")),
      at(20, "center", "send", "agalink", to_bytes("shut-valve-09-ok")),
      at(30, "center", "send", "agalink", to_bytes("set-rate-300-lpm")),
  };
  return s;
}

scn::Scenario sscada_replay_immune() {
  scn::Scenario s;
  s.seed = 2;
  s.tick_limit = 100;
  s.devices = {device("center", "master"), device("rtu1", "slave")};
  scn::Link l = link("center", "rtu1");
  l.adversary = replay_script(0x44);
  s.links = {l};

  scn::Channel ch;
  ch.id = "p2plink";
  ch.type = scn::ChannelType::P2P;
  ch.device_a = "center";
  ch.device_b = "rtu1";
  ch.master_secret = hex(kMasterSecret);
  s.channels = {ch};

  s.traffic = {
      at(10, "center", "send", "p2plink", to_bytes("open-valve-07-ok")),
      at(20, "center", "send", "p2plink", to_bytes("shut-valve-09-ok")),
      at(30, "center", "send", "p2plink", to_bytes("set-rate-300-lpm")),
      at(50, "center", "send", "p2plink", to_bytes("resume-normal-op")),
  };
  return s;
}

scn::Channel tesla_channel() {
  scn::Channel ch;
  ch.id = "wave";
  ch.type = scn::ChannelType::BROADCAST;
  ch.sender = "center";
  ch.receivers = {"rtu1", "rtu2"};
  ch.chain_seed = hex(kChainSeed);
  ch.t0 = 100;
  ch.delta = 10;
  ch.d = 2;
  ch.chain_length = 30;
  return ch;
}

// A packet for interval 0 with a genuine MAC under chain key K_2: exactly
// what an adversary can build the moment K_2 is disclosed.
Bytes tesla_forgery() {
  bcast::Schedule sch{100, 10, 2, 30};
  bcast::SenderState snd = bcast::make_sender(take<32>(hex(kChainSeed)), sch);
  Bytes payload = to_bytes("open-all-valves");
  bcast::Packet p;
  p.interval = 0;
  p.payload = payload;
  Bytes data;
  append_be32(data, 0);
  append(data, payload);
  p.tag = mac_compute(bcast::interval_mac_key(snd.chain[2].bytes), data);
  return p.serialize();
}

scn::Scenario tesla(bool skewed) {
  scn::Scenario s;
  s.seed = skewed ? 4 : 3;
  s.tick_limit = 200;
  // The skewed variant puts the receiver's clock behind by more than the
  // disclosure delay d*delta = 20 ticks.
  s.devices = {device("center"), device("rtu1", "peer", skewed ? -25 : 0),
               device("rtu2")};
  scn::Link tapped = link("center", "rtu1");

  scn::AdversaryRule inject = rule(0x4B, scn::ActionKind::INJECT);
  inject.match_from = "center";
  inject.match_seq = {{2, 2}};
  inject.inject_bytes = tesla_forgery();
  // Honest-clock variant: the forgery trails the disclosure it was built
  // from. Skewed variant: the adversary slips it in ahead of the disclosure.
  inject.after = skewed ? 0 : 1;
  inject.note = skewed ? "forge-before-disclosure" : "forge-after-disclosure";
  tapped.adversary = {inject};

  s.links = {tapped, link("center", "rtu2")};
  s.channels = {tesla_channel()};
  s.traffic = {
      at(105, "center", "bcast", "wave", to_bytes("temp-ok")),
      at(115, "center", "bcast", "wave", to_bytes("pressure-ok")),
      at(125, "center", "bcast", "wave", to_bytes("flow-ok")),
  };
  return s;
}

scn::Scenario counter_sync() {
  scn::Scenario s;
  s.seed = 5;
  s.tick_limit = 200;
  s.devices = {device("center", "master"), device("rtu1", "slave")};
  scn::Link l = link("center", "rtu1");

  scn::AdversaryRule jam = rule(0x44, scn::ActionKind::DROP);
  jam.match_from = "center";
  jam.match_count = {{1, 10}};
  jam.note = "jam-initial-window";
  l.adversary = {jam};
  s.links = {l};

  scn::Channel ch;
  ch.id = "p2plink";
  ch.type = scn::ChannelType::P2P;
  ch.device_a = "center";
  ch.device_b = "rtu1";
  ch.master_secret = hex(kMasterSecret);
  s.channels = {ch};

  for (uint64_t k = 0; k < 10; ++k) {
    s.traffic.push_back(at(10 + 10 * k, "center", "send", "p2plink",
                           to_bytes("poll-" + std::to_string(k))));
  }
  s.traffic.push_back(
      at(110, "center", "send", "p2plink", to_bytes("post-jam-status")));
  s.traffic.push_back(at(120, "rtu1", "sync", "p2plink"));
  s.traffic.push_back(
      at(130, "center", "send", "p2plink", to_bytes("post-sync-status")));
  return s;
}

scn::Scenario emergency_delay(bool revised) {
  scn::Scenario s;
  s.seed = revised ? 7 : 6;
  s.tick_limit = 600;
  s.devices = {device("center"), device("rtu1")};
  scn::Link l = link("center", "rtu1");

  scn::AdversaryRule hold = rule(0x45, scn::ActionKind::DELAY);
  hold.delay_ticks = 500;
  hold.note = "hold-reveal";
  l.adversary = {hold};
  s.links = {l};

  scn::Channel ch;
  ch.id = "em";
  ch.type = revised ? scn::ChannelType::EMERGENCY_REVISED
                    : scn::ChannelType::EMERGENCY_BASIC;
  ch.sender = "center";
  ch.receivers = {"rtu1"};
  ch.u = 2;
  ch.v = 2;
  if (revised) ch.expiries = {100, 200, 100, 200};
  s.channels = {ch};

  scn::TrafficAction emit = at(10, "center", "emit", "em");
  emit.msg_index = 1;
  s.traffic = {emit};
  return s;
}

scn::Scenario emergency_revised() {
  scn::Scenario s;
  s.seed = 8;
  s.tick_limit = 520;
  s.devices = {device("center"), device("rtu1"), device("rtu2")};
  s.links = {link("center", "rtu1"), link("center", "rtu2")};

  scn::Channel cast;
  cast.id = "tablecast";
  cast.type = scn::ChannelType::BROADCAST;
  cast.sender = "center";
  cast.receivers = {"rtu1", "rtu2"};
  cast.chain_seed = hex(kChainSeed);
  cast.t0 = 100;
  cast.delta = 10;
  cast.d = 1;
  cast.chain_length = 40;

  scn::Channel em;
  em.id = "em";
  em.type = scn::ChannelType::EMERGENCY_REVISED;
  em.sender = "center";
  em.receivers = {"rtu1", "rtu2"};
  em.u = 2;
  em.v = 2;
  em.expiries = {300, 450, 320, 470};
  em.via = "tablecast";
  em.fragment_size = 96;
  em.est_tx = 5;
  s.channels = {cast, em};

  auto emit = [](uint64_t tick, uint16_t i) {
    scn::TrafficAction a = at(tick, "center", "emit", "em");
    a.msg_index = i;
    return a;
  };
  s.traffic = {emit(110, 1), emit(120, 1), emit(130, 1),
               at(200, "center", "install", "em"),
               emit(300, 2), emit(460, 2), emit(470, 1)};
  return s;
}

struct Milestone {
  const char* needle;  // substring of the verdict
  const char* text;
};

const std::vector<Milestone>& milestones(const std::string& name) {
  static const std::vector<Milestone> aga = {
      {"SENT(seq:1)", "the center encrypts command #1 and sends it; the MAC "
                      "covers sequence and plaintext"},
      {"RECORDED(label:log,n:1", "the adversary logs the ciphertext verbatim"},
      {"FLIPPED", "one tag bit is flipped in transit, so the receiver's MAC "
                  "check is doomed"},
      {"MAC_FAILED(seq:1", "the receiver decrypts and hands the plaintext on "
                           "BEFORE the MAC verdict; the failure only logs, so "
                           "recv_seq stays frozen"},
      {"REPLAYED(label:log,n:1", "the adversary resends logged ciphertext #1, "
                                 "tag intact"},
      {"ACCEPTED(seq:1,stale,replayed", "the frozen receiver accepts the "
                                        "stale command as fresh - replay "
                                        "complete"},
  };
  static const std::vector<Milestone> immune = {
      {"SENT(ctr:0)", "the center sends message #1 over the per-direction "
                      "keyed channel; the counter never rides the wire"},
      {"FLIPPED", "the same one-bit tag tamper as against the draft protocol"},
      {"MAC_FAILED_SUPPRESSED", "mode M2 verifies the MAC first: nothing is "
                                "delivered and the counter does not move"},
      {"REPLAYED(label:log,n:1", "the adversary replays the logged original"},
      {"ACCEPTED(ctr:0,replayed)", "the untampered original is simply the "
                                   "first delivery at counter 0 - a delayed "
                                   "message, not a replay"},
      {"ACCEPTED(ctr:3)", "later traffic flows normally; no counter is ever "
                          "accepted twice"},
  };
  static const std::vector<Milestone> tes = {
      {"SENT(i:0)", "interval-0 packets are MACed under chain key K_2, "
                    "disclosed only two intervals later"},
      {"BUFFERED(i:0", "receivers buffer: the key is still secret, so the MAC "
                       "cannot be checked yet"},
      {"DISCLOSED(i:2", "on schedule, the sender publishes K_2"},
      {"INJECTED", "holding K_2, the adversary forges an interval-0 packet "
                   "with a perfectly valid MAC"},
      {"AUTHENTIC(i:0)", "the buffered genuine packet verifies against the "
                         "disclosed key"},
      {"REJECTED_KEY_DISCLOSED(i:0,injected", "the forgery arrives after K_2 "
                                              "went public, so it proves "
                                              "nothing and is refused"},
  };
  static const std::vector<Milestone> skew = {
      {"DISCLOSED(i:2", "the sender publishes K_2 on schedule"},
      {"INJECTED", "the adversary slips its forgery in just ahead of the "
                   "disclosure"},
      {"BUFFERED(i:0,injected", "the receiver's clock runs more than d*delta "
                                "behind, so the packet still looks fresh and "
                                "is buffered"},
      {"AUTHENTIC(i:0,injected", "the disclosed key verifies the forgery: "
                                 "with clocks worse than the disclosure "
                                 "delay, the scheme's guarantee is gone"},
  };
  static const std::vector<Milestone> delay_basic = {
      {"EMG_REVEAL(i:1", "the center reveals the preimage for emergency "
                         "message 1"},
      {"DELAYED(ticks:500", "the adversary holds the reveal"},
      {"EMG_ACCEPTED(i:1", "the basic channel carries no notion of time: the "
                           "stale emergency is accepted on arrival"},
  };
  static const std::vector<Milestone> delay_revised = {
      {"EMG_REVEAL(i:1", "the center reveals the preimage; its expiry T is "
                         "baked into the commitment"},
      {"DELAYED(ticks:500", "the adversary holds the reveal past T"},
      {"EMG_EXPIRED(i:1", "held past its expiry, the reveal is dead: weak "
                          "freshness holds"},
  };
  static const std::vector<Milestone> revised = {
      {"EMG_ACCEPTED(i:1,j:1", "an emergency accepted inside its expiry "
                               "window"},
      {"ERROR(uses_exhausted)", "both uses of message 1 are spent; the sender "
                                "refuses to over-reveal"},
      {"EMG_TABLE_INSTALLED", "a fresh commitment table arrives over the "
                              "authenticated broadcast and replaces the old "
                              "generation"},
      {"EMG_ACCEPTED(i:2,j:1", "the new generation authenticates further "
                               "emergencies"},
      {"ERROR(no_valid_window)", "every unused slot for message 1 has "
                                 "expired: time to re-commit"},
  };
  static const std::vector<Milestone> csync = {
      {"DROPPED", "the adversary jams the first ten frames; the sender's "
                  "counter keeps climbing"},
      {"PREFIX_REJECTED", "the receiver's trial window no longer reaches the "
                          "sender's counter: the channel is desynchronized"},
      {"SYNC_REQUESTED", "the receiver sends a fresh nonce"},
      {"SYNC_OK", "the response binds the sender's counter to that nonce; one "
                  "exchange restores agreement"},
      {"ACCEPTED(ctr:11)", "traffic flows again"},
  };
  static const std::vector<Milestone> none;
  if (name == "aga-replay") return aga;
  if (name == "sscada-replay-immune") return immune;
  if (name == "tesla") return tes;
  if (name == "tesla-skew") return skew;
  if (name == "emergency-delay") return delay_basic;
  if (name == "emergency-delay-revised") return delay_revised;
  if (name == "emergency-revised") return revised;
  if (name == "counter-sync") return csync;
  return none;
}

}  // namespace

std::vector<std::string> scenario_names() {
  return {"aga-replay",      "sscada-replay-immune", "tesla",
          "tesla-skew",      "counter-sync",         "emergency-delay",
          "emergency-delay-revised", "emergency-revised"};
}

scn::Scenario build(const std::string& name) {
  if (name == "aga-replay") return aga_replay();
  if (name == "sscada-replay-immune") return sscada_replay_immune();
  if (name == "tesla") return tesla(false);
  if (name == "tesla-skew") return tesla(true);
  if (name == "counter-sync") return counter_sync();
  if (name == "emergency-delay") return emergency_delay(false);
  if (name == "emergency-delay-revised") return emergency_delay(true);
  if (name == "emergency-revised") return emergency_revised();
  throw ScriptError("unknown scenario '" + name + "'");
}

std::vector<std::string> demo_names() {
  return {"aga-attack", "tesla", "emergency-delay", "emergency-revised"};
}

std::vector<std::string> demo_scenarios(const std::string& demo) {
  if (demo == "aga-attack") return {"aga-replay"};
  if (demo == "tesla") return {"tesla", "tesla-skew"};
  if (demo == "emergency-delay")
    return {"emergency-delay", "emergency-delay-revised"};
  if (demo == "emergency-revised") return {"emergency-revised"};
  throw ScriptError("unknown demo '" + demo + "'");
}

std::string narrate(const std::string& scenario_name, const sim::Transcript& t) {
  std::ostringstream out;
  const auto& steps = milestones(scenario_name);
  size_t next = 0;
  for (const sim::TranscriptEvent& e : t.events) {
    if (next >= steps.size()) break;
    if (e.verdict.find(steps[next].needle) == std::string::npos) continue;
    out << "  t=" << e.tick << " [" << e.actor << "] " << e.verdict << "\n"
        << "      step " << (next + 1) << ": " << steps[next].text << "\n";
    ++next;
  }
  for (; next < steps.size(); ++next) {
    out << "  (step " << (next + 1) << " not observed: " << steps[next].text
        << ")\n";
  }
  return out.str();
}

}  // namespace sscada::demos
