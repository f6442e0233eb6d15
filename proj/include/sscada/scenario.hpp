#pragma once

// Scenario model plus its text format. A scenario file is a tree of
// whitespace-indented lines; each line is a key followed by arguments, and a
// line's children are the following lines indented one level deeper. The
// exact grammar is documented in the repository README. Parsing is
// two-stage: text -> Node tree -> typed Scenario, so binding errors can name
// the line and field they came from.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sscada/bytes.hpp"

namespace sscada::scn {

struct Node {
  std::string key;
  std::vector<std::string> args;
  std::vector<Node> children;
  size_t line = 0;
};

Node parse_tree(std::string_view text);  // ParseError with line numbers

struct Device {
  std::string id;
  std::string role = "peer";  // master | slave | peer
  int64_t clock_offset = 0;

  bool operator==(const Device&) const = default;
};

enum class ActionKind { DROP, DELAY, FLIP_BIT, RECORD, REPLAY, INJECT };

const char* action_kind_name(ActionKind k);

struct AdversaryRule {
  std::optional<uint8_t> match_type;  // wire type byte
  std::optional<std::string> match_from;
  std::optional<std::pair<uint64_t, uint64_t>> match_count;  // 1-based, inclusive
  std::optional<std::pair<uint64_t, uint64_t>> match_seq;    // BE32 after type byte

  ActionKind action = ActionKind::DROP;
  uint64_t delay_ticks = 0;    // DELAY
  int64_t bit_offset = 0;      // FLIP_BIT; negative counts from the end
  std::string label;           // RECORD / REPLAY
  uint64_t replay_index = 0;   // REPLAY
  Bytes inject_bytes;          // INJECT
  uint64_t after = 0;          // extra delay for REPLAY / INJECT emissions
  std::string note;            // free annotation, shows up in the transcript

  bool operator==(const AdversaryRule&) const = default;
};

struct Link {
  std::string device_a;
  std::string device_b;
  uint64_t latency = 1;
  double loss_rate = 0.0;
  std::vector<AdversaryRule> adversary;

  bool operator==(const Link&) const = default;
};

enum class ChannelType { AGA, P2P, BROADCAST, EMERGENCY_BASIC, EMERGENCY_REVISED };

const char* channel_type_name(ChannelType t);

struct Channel {
  std::string id;
  ChannelType type = ChannelType::P2P;

  // aga + p2p
  std::string device_a;  // aga: arbitrary side; p2p: the MASTER
  std::string device_b;

  // aga
  Bytes enc_key;  // 16 bytes
  Bytes mac_key;  // 32 bytes

  // p2p
  Bytes master_secret;  // 32 bytes
  std::string mode = "m2";
  uint32_t prefix_bits = 32;
  uint32_t window = 8;
  bool mac_enabled = true;

  // broadcast + emergency
  std::string sender;
  std::vector<std::string> receivers;

  // broadcast
  Bytes chain_seed;  // 32 bytes
  uint64_t t0 = 0;
  uint64_t delta = 1;
  uint32_t d = 1;
  uint32_t chain_length = 1;
  bool auto_disclose = true;

  // emergency
  uint16_t u = 1;
  uint16_t v = 1;
  std::vector<uint64_t> expiries;  // u*v row-major, revised only
  std::string via;                 // broadcast channel carrying the table
  uint64_t fragment_size = 64;
  uint64_t est_tx = 0;

  bool operator==(const Channel&) const = default;
};

struct TrafficAction {
  uint64_t tick = 0;
  std::string device;
  std::string verb;  // send | send_auth | passthrough | bcast | disclose |
                     // sync | emit | install
  std::string channel;
  Bytes payload;           // send / send_auth / passthrough / bcast
  uint16_t msg_index = 0;  // emit

  bool operator==(const TrafficAction&) const = default;
};

struct Scenario {
  uint64_t seed = 0;
  uint64_t tick_limit = 100000;
  std::vector<Device> devices;
  std::vector<Link> links;
  std::vector<Channel> channels;
  std::vector<TrafficAction> traffic;

  bool operator==(const Scenario&) const = default;
};

// Text -> Scenario. Throws ParseError (syntax, with line) on bad text; binding
// problems and semantic violations are returned by validate().
Scenario parse_scenario(std::string_view text);

// Canonical text form; parse_scenario(serialize(s)) == s.
std::string serialize(const Scenario& s);

// All problems found, each as "path: message" (e.g. "links[0].loss_rate:
// must be within [0, 1]"). Empty means the scenario is runnable.
std::vector<std::string> validate(const Scenario& s);

const Device* find_device(const Scenario& s, const std::string& id);
const Channel* find_channel(const Scenario& s, const std::string& id);
const Link* find_link(const Scenario& s, const std::string& a,
                      const std::string& b);

}  // namespace sscada::scn
