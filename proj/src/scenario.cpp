#include "sscada/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <set>
#include <sstream>

#include "sscada/errors.hpp"

namespace sscada::scn {

namespace {

[[noreturn]] void fail(size_t line, const std::string& msg) {
  throw ParseError("line " + std::to_string(line) + ": " + msg);
}

std::vector<std::string> split_words(std::string_view s) {
  std::vector<std::string> out;
  size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && s[i] == ' ') ++i;
    size_t j = i;
    while (j < s.size() && s[j] != ' ') ++j;
    if (j > i) out.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

uint64_t parse_u64(const Node& n, size_t idx) {
  const std::string& s = n.args[idx];
  uint64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    fail(n.line, "'" + s + "' is not an unsigned integer");
  }
  return v;
}

int64_t parse_i64(const Node& n, size_t idx) {
  const std::string& s = n.args[idx];
  int64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    fail(n.line, "'" + s + "' is not an integer");
  }
  return v;
}

double parse_double(const Node& n, size_t idx) {
  const std::string& s = n.args[idx];
  double v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    fail(n.line, "'" + s + "' is not a number");
  }
  return v;
}

uint8_t parse_type_byte(const Node& n, size_t idx) {
  const std::string& s = n.args[idx];
  if (s.size() != 4 || s[0] != '0' || s[1] != 'x') {
    fail(n.line, "type byte must look like 0x41");
  }
  try {
    return from_hex(s.substr(2)).at(0);
  } catch (const Error&) {
    fail(n.line, "'" + s + "' is not a hex byte");
  }
}

bool parse_on_off(const Node& n, size_t idx) {
  const std::string& s = n.args[idx];
  if (s == "on") return true;
  if (s == "off") return false;
  fail(n.line, "expected 'on' or 'off', got '" + s + "'");
}

Bytes parse_hex_arg(const Node& n, size_t idx) {
  try {
    return from_hex(n.args[idx]);
  } catch (const Error& e) {
    fail(n.line, std::string("bad hex: ") + e.what());
  }
}

Bytes parse_payload(const Node& n, size_t idx) {
  const std::string& s = n.args[idx];
  if (s.starts_with("str:")) return to_bytes(s.substr(4));
  if (s.starts_with("hex:")) {
    try {
      return from_hex(s.substr(4));
    } catch (const Error& e) {
      fail(n.line, std::string("bad hex payload: ") + e.what());
    }
  }
  fail(n.line, "payload must be str:<text> or hex:<bytes>");
}

void need_args(const Node& n, size_t count) {
  if (n.args.size() != count) {
    fail(n.line, "'" + n.key + "' takes " + std::to_string(count) +
                     " argument(s), got " + std::to_string(n.args.size()));
  }
}

void need_leaf(const Node& n) {
  if (!n.children.empty()) fail(n.children[0].line, "'" + n.key + "' takes no block");
}

std::string format_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

bool printable_token(const Bytes& b) {
  if (b.empty()) return false;
  return std::all_of(b.begin(), b.end(),
                     [](uint8_t c) { return c > 0x20 && c < 0x7f; });
}

std::string format_payload(const Bytes& b) {
  if (printable_token(b)) return "str:" + to_string(b);
  return "hex:" + to_hex(b);
}

}  // namespace

Node parse_tree(std::string_view text) {
  Node root;
  std::vector<Node*> stack{&root};  // stack[d] = open node at depth d-1

  size_t line_no = 0;
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t eol = text.find('\n', pos);
    std::string_view line = text.substr(
        pos, eol == std::string_view::npos ? text.size() - pos : eol - pos);
    ++line_no;
    pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;

    if (line.find('\t') != std::string_view::npos) {
      fail(line_no, "tabs are not allowed; indent with two spaces");
    }
    size_t indent = 0;
    while (indent < line.size() && line[indent] == ' ') ++indent;
    std::string_view body = line.substr(indent);
    if (body.empty() || body[0] == '#') continue;
    if (indent % 2 != 0) fail(line_no, "indentation must be a multiple of two spaces");
    size_t depth = indent / 2;
    if (depth + 1 > stack.size()) {
      fail(line_no, "indented too deep (no parent line)");
    }
    stack.resize(depth + 1);

    Node n;
    auto words = split_words(body);
    n.key = words[0];
    n.args.assign(words.begin() + 1, words.end());
    n.line = line_no;
    stack[depth]->children.push_back(std::move(n));
    stack.push_back(&stack[depth]->children.back());
  }
  return root;
}

const char* action_kind_name(ActionKind k) {
  switch (k) {
    case ActionKind::DROP: return "drop";
    case ActionKind::DELAY: return "delay";
    case ActionKind::FLIP_BIT: return "flip_bit";
    case ActionKind::RECORD: return "record";
    case ActionKind::REPLAY: return "replay";
    case ActionKind::INJECT: return "inject";
  }
  return "?";
}

const char* channel_type_name(ChannelType t) {
  switch (t) {
    case ChannelType::AGA: return "aga";
    case ChannelType::P2P: return "p2p";
    case ChannelType::BROADCAST: return "broadcast";
    case ChannelType::EMERGENCY_BASIC: return "emergency-basic";
    case ChannelType::EMERGENCY_REVISED: return "emergency-revised";
  }
  return "?";
}

namespace {

AdversaryRule bind_rule(const Node& rule) {
  AdversaryRule r;
  bool have_action = false;
  std::set<std::string> seen;
  for (const Node& c : rule.children) {
    if (c.key != "expiry_row" && !seen.insert(c.key).second) {
      fail(c.line, "duplicate '" + c.key + "' in rule");
    }
    if (c.key == "match_type") {
      need_args(c, 1);
      need_leaf(c);
      r.match_type = parse_type_byte(c, 0);
    } else if (c.key == "match_from") {
      need_args(c, 1);
      need_leaf(c);
      r.match_from = c.args[0];
    } else if (c.key == "match_count") {
      need_args(c, 2);
      need_leaf(c);
      r.match_count = {parse_u64(c, 0), parse_u64(c, 1)};
    } else if (c.key == "match_seq") {
      need_args(c, 2);
      need_leaf(c);
      r.match_seq = {parse_u64(c, 0), parse_u64(c, 1)};
    } else if (c.key == "after") {
      need_args(c, 1);
      need_leaf(c);
      r.after = parse_u64(c, 0);
    } else if (c.key == "note") {
      need_args(c, 1);
      need_leaf(c);
      r.note = c.args[0];
    } else if (c.key == "action") {
      need_leaf(c);
      have_action = true;
      if (c.args.empty()) fail(c.line, "action needs a kind");
      const std::string& kind = c.args[0];
      if (kind == "drop") {
        need_args(c, 1);
        r.action = ActionKind::DROP;
      } else if (kind == "delay") {
        need_args(c, 2);
        r.action = ActionKind::DELAY;
        r.delay_ticks = parse_u64(c, 1);
      } else if (kind == "flip_bit") {
        need_args(c, 2);
        r.action = ActionKind::FLIP_BIT;
        r.bit_offset = parse_i64(c, 1);
      } else if (kind == "record") {
        need_args(c, 2);
        r.action = ActionKind::RECORD;
        r.label = c.args[1];
      } else if (kind == "replay") {
        need_args(c, 3);
        r.action = ActionKind::REPLAY;
        r.label = c.args[1];
        r.replay_index = parse_u64(c, 2);
      } else if (kind == "inject") {
        need_args(c, 2);
        r.action = ActionKind::INJECT;
        if (!c.args[1].starts_with("hex:")) {
          fail(c.line, "inject payload must be hex:<bytes>");
        }
        r.inject_bytes = parse_payload(c, 1);
      } else {
        fail(c.line, "unknown action '" + kind + "'");
      }
    } else {
      fail(c.line, "unknown rule key '" + c.key + "'");
    }
  }
  if (!have_action) fail(rule.line, "rule has no action");
  return r;
}

Link bind_link(const Node& n) {
  need_args(n, 2);
  Link l;
  l.device_a = n.args[0];
  l.device_b = n.args[1];
  std::set<std::string> seen;
  for (const Node& c : n.children) {
    if (!seen.insert(c.key).second) fail(c.line, "duplicate '" + c.key + "'");
    if (c.key == "latency") {
      need_args(c, 1);
      need_leaf(c);
      l.latency = parse_u64(c, 0);
    } else if (c.key == "loss_rate") {
      need_args(c, 1);
      need_leaf(c);
      l.loss_rate = parse_double(c, 0);
    } else if (c.key == "adversary") {
      need_args(c, 0);
      for (const Node& rule : c.children) {
        if (rule.key != "rule") fail(rule.line, "expected 'rule'");
        need_args(rule, 0);
        l.adversary.push_back(bind_rule(rule));
      }
    } else {
      fail(c.line, "unknown link key '" + c.key + "'");
    }
  }
  return l;
}

Channel bind_channel(const Node& n) {
  need_args(n, 1);
  Channel ch;
  ch.id = n.args[0];
  std::set<std::string> seen;
  for (const Node& c : n.children) {
    if (c.key != "expiry_row" && !seen.insert(c.key).second) {
      fail(c.line, "duplicate '" + c.key + "'");
    }
    if (c.key == "type") {
      need_args(c, 1);
      need_leaf(c);
      const std::string& t = c.args[0];
      if (t == "aga") ch.type = ChannelType::AGA;
      else if (t == "p2p") ch.type = ChannelType::P2P;
      else if (t == "broadcast") ch.type = ChannelType::BROADCAST;
      else if (t == "emergency-basic") ch.type = ChannelType::EMERGENCY_BASIC;
      else if (t == "emergency-revised") ch.type = ChannelType::EMERGENCY_REVISED;
      else fail(c.line, "unknown channel type '" + t + "'");
    } else if (c.key == "devices") {
      need_args(c, 2);
      need_leaf(c);
      ch.device_a = c.args[0];
      ch.device_b = c.args[1];
    } else if (c.key == "enc_key") {
      need_args(c, 1);
      need_leaf(c);
      ch.enc_key = parse_hex_arg(c, 0);
    } else if (c.key == "mac_key") {
      need_args(c, 1);
      need_leaf(c);
      ch.mac_key = parse_hex_arg(c, 0);
    } else if (c.key == "master_secret") {
      need_args(c, 1);
      need_leaf(c);
      ch.master_secret = parse_hex_arg(c, 0);
    } else if (c.key == "mode") {
      need_args(c, 1);
      need_leaf(c);
      ch.mode = c.args[0];
    } else if (c.key == "prefix_bits") {
      need_args(c, 1);
      need_leaf(c);
      ch.prefix_bits = static_cast<uint32_t>(parse_u64(c, 0));
    } else if (c.key == "window") {
      need_args(c, 1);
      need_leaf(c);
      ch.window = static_cast<uint32_t>(parse_u64(c, 0));
    } else if (c.key == "mac") {
      need_args(c, 1);
      need_leaf(c);
      ch.mac_enabled = parse_on_off(c, 0);
    } else if (c.key == "sender") {
      need_args(c, 1);
      need_leaf(c);
      ch.sender = c.args[0];
    } else if (c.key == "receivers") {
      if (c.args.empty()) fail(c.line, "receivers needs at least one device");
      need_leaf(c);
      ch.receivers = c.args;
    } else if (c.key == "chain_seed") {
      need_args(c, 1);
      need_leaf(c);
      ch.chain_seed = parse_hex_arg(c, 0);
    } else if (c.key == "t0") {
      need_args(c, 1);
      need_leaf(c);
      ch.t0 = parse_u64(c, 0);
    } else if (c.key == "delta") {
      need_args(c, 1);
      need_leaf(c);
      ch.delta = parse_u64(c, 0);
    } else if (c.key == "d") {
      need_args(c, 1);
      need_leaf(c);
      ch.d = static_cast<uint32_t>(parse_u64(c, 0));
    } else if (c.key == "n") {
      need_args(c, 1);
      need_leaf(c);
      ch.chain_length = static_cast<uint32_t>(parse_u64(c, 0));
    } else if (c.key == "auto_disclose") {
      need_args(c, 1);
      need_leaf(c);
      ch.auto_disclose = parse_on_off(c, 0);
    } else if (c.key == "u") {
      need_args(c, 1);
      need_leaf(c);
      ch.u = static_cast<uint16_t>(parse_u64(c, 0));
    } else if (c.key == "v") {
      need_args(c, 1);
      need_leaf(c);
      ch.v = static_cast<uint16_t>(parse_u64(c, 0));
    } else if (c.key == "expiry_row") {
      if (c.args.size() < 2) fail(c.line, "expiry_row <msg> <T...>");
      need_leaf(c);
      for (size_t k = 1; k < c.args.size(); ++k) {
        ch.expiries.push_back(parse_u64(c, k));
      }
    } else if (c.key == "via") {
      need_args(c, 1);
      need_leaf(c);
      ch.via = c.args[0];
    } else if (c.key == "fragment_size") {
      need_args(c, 1);
      need_leaf(c);
      ch.fragment_size = parse_u64(c, 0);
    } else if (c.key == "est_tx") {
      need_args(c, 1);
      need_leaf(c);
      ch.est_tx = parse_u64(c, 0);
    } else {
      fail(c.line, "unknown channel key '" + c.key + "'");
    }
  }
  return ch;
}

TrafficAction bind_traffic(const Node& c) {
  // at <tick> <device> <verb> <channel> [arg]
  if (c.key != "at") fail(c.line, "expected 'at'");
  need_leaf(c);
  if (c.args.size() < 4) fail(c.line, "at <tick> <device> <verb> <channel> [arg]");
  TrafficAction a;
  a.tick = parse_u64(c, 0);
  a.device = c.args[1];
  a.verb = c.args[2];
  a.channel = c.args[3];
  bool needs_payload = a.verb == "send" || a.verb == "send_auth" ||
                       a.verb == "passthrough" || a.verb == "bcast";
  bool needs_index = a.verb == "emit";
  if (needs_payload) {
    if (c.args.size() != 5) fail(c.line, "'" + a.verb + "' needs a payload");
    a.payload = parse_payload(c, 4);
  } else if (needs_index) {
    if (c.args.size() != 5) fail(c.line, "'emit' needs a message index");
    a.msg_index = static_cast<uint16_t>(parse_u64(c, 4));
  } else {
    if (c.args.size() != 4) fail(c.line, "'" + a.verb + "' takes no argument");
  }
  return a;
}

}  // namespace

Scenario parse_scenario(std::string_view text) {
  Node root = parse_tree(text);
  Scenario s;
  std::set<std::string> seen;
  for (const Node& n : root.children) {
    if (n.key == "seed") {
      if (!seen.insert("seed").second) fail(n.line, "duplicate 'seed'");
      need_args(n, 1);
      need_leaf(n);
      s.seed = parse_u64(n, 0);
    } else if (n.key == "tick_limit") {
      if (!seen.insert("tick_limit").second) fail(n.line, "duplicate 'tick_limit'");
      need_args(n, 1);
      need_leaf(n);
      s.tick_limit = parse_u64(n, 0);
    } else if (n.key == "device") {
      need_args(n, 1);
      Device d;
      d.id = n.args[0];
      std::set<std::string> dseen;
      for (const Node& c : n.children) {
        if (!dseen.insert(c.key).second) fail(c.line, "duplicate '" + c.key + "'");
        if (c.key == "role") {
          need_args(c, 1);
          need_leaf(c);
          d.role = c.args[0];
        } else if (c.key == "clock_offset") {
          need_args(c, 1);
          need_leaf(c);
          d.clock_offset = parse_i64(c, 0);
        } else {
          fail(c.line, "unknown device key '" + c.key + "'");
        }
      }
      s.devices.push_back(std::move(d));
    } else if (n.key == "link") {
      s.links.push_back(bind_link(n));
    } else if (n.key == "channel") {
      s.channels.push_back(bind_channel(n));
    } else if (n.key == "traffic") {
      need_args(n, 0);
      for (const Node& c : n.children) s.traffic.push_back(bind_traffic(c));
    } else {
      fail(n.line, "unknown key '" + n.key + "'");
    }
  }
  return s;
}

std::string serialize(const Scenario& s) {
  std::ostringstream out;
  out << "seed " << s.seed << "\n";
  out << "tick_limit " << s.tick_limit << "\n";
  for (const Device& d : s.devices) {
    out << "device " << d.id << "\n";
    out << "  role " << d.role << "\n";
    out << "  clock_offset " << d.clock_offset << "\n";
  }
  for (const Link& l : s.links) {
    out << "link " << l.device_a << " " << l.device_b << "\n";
    out << "  latency " << l.latency << "\n";
    out << "  loss_rate " << format_double(l.loss_rate) << "\n";
    if (!l.adversary.empty()) {
      out << "  adversary\n";
      for (const AdversaryRule& r : l.adversary) {
        out << "    rule\n";
        if (r.match_type) {
          out << "      match_type 0x" << to_hex(Bytes{*r.match_type}) << "\n";
        }
        if (r.match_from) out << "      match_from " << *r.match_from << "\n";
        if (r.match_count) {
          out << "      match_count " << r.match_count->first << " "
              << r.match_count->second << "\n";
        }
        if (r.match_seq) {
          out << "      match_seq " << r.match_seq->first << " "
              << r.match_seq->second << "\n";
        }
        out << "      action " << action_kind_name(r.action);
        switch (r.action) {
          case ActionKind::DROP: break;
          case ActionKind::DELAY: out << " " << r.delay_ticks; break;
          case ActionKind::FLIP_BIT: out << " " << r.bit_offset; break;
          case ActionKind::RECORD: out << " " << r.label; break;
          case ActionKind::REPLAY:
            out << " " << r.label << " " << r.replay_index;
            break;
          case ActionKind::INJECT: out << " hex:" << to_hex(r.inject_bytes); break;
        }
        out << "\n";
        if (r.after != 0) out << "      after " << r.after << "\n";
        if (!r.note.empty()) out << "      note " << r.note << "\n";
      }
    }
  }
  for (const Channel& ch : s.channels) {
    out << "channel " << ch.id << "\n";
    out << "  type " << channel_type_name(ch.type) << "\n";
    switch (ch.type) {
      case ChannelType::AGA:
        out << "  devices " << ch.device_a << " " << ch.device_b << "\n";
        out << "  enc_key " << to_hex(ch.enc_key) << "\n";
        out << "  mac_key " << to_hex(ch.mac_key) << "\n";
        break;
      case ChannelType::P2P:
        out << "  devices " << ch.device_a << " " << ch.device_b << "\n";
        out << "  master_secret " << to_hex(ch.master_secret) << "\n";
        out << "  mode " << ch.mode << "\n";
        out << "  prefix_bits " << ch.prefix_bits << "\n";
        out << "  window " << ch.window << "\n";
        out << "  mac " << (ch.mac_enabled ? "on" : "off") << "\n";
        break;
      case ChannelType::BROADCAST: {
        out << "  sender " << ch.sender << "\n";
        out << "  receivers";
        for (const std::string& r : ch.receivers) out << " " << r;
        out << "\n";
        out << "  chain_seed " << to_hex(ch.chain_seed) << "\n";
        out << "  t0 " << ch.t0 << "\n";
        out << "  delta " << ch.delta << "\n";
        out << "  d " << ch.d << "\n";
        out << "  n " << ch.chain_length << "\n";
        out << "  auto_disclose " << (ch.auto_disclose ? "on" : "off") << "\n";
        break;
      }
      case ChannelType::EMERGENCY_BASIC:
      case ChannelType::EMERGENCY_REVISED: {
        out << "  sender " << ch.sender << "\n";
        out << "  receivers";
        for (const std::string& r : ch.receivers) out << " " << r;
        out << "\n";
        out << "  u " << ch.u << "\n";
        out << "  v " << ch.v << "\n";
        if (ch.type == ChannelType::EMERGENCY_REVISED &&
            ch.expiries.size() == size_t(ch.u) * ch.v) {
          for (uint16_t i = 0; i < ch.u; ++i) {
            out << "  expiry_row " << (i + 1);
            for (uint16_t j = 0; j < ch.v; ++j) {
              out << " " << ch.expiries[size_t(i) * ch.v + j];
            }
            out << "\n";
          }
        }
        if (!ch.via.empty()) out << "  via " << ch.via << "\n";
        out << "  fragment_size " << ch.fragment_size << "\n";
        out << "  est_tx " << ch.est_tx << "\n";
        break;
      }
    }
  }
  if (!s.traffic.empty()) {
    out << "traffic\n";
    for (const TrafficAction& a : s.traffic) {
      out << "  at " << a.tick << " " << a.device << " " << a.verb << " "
          << a.channel;
      if (a.verb == "send" || a.verb == "send_auth" || a.verb == "passthrough" ||
          a.verb == "bcast") {
        out << " " << format_payload(a.payload);
      } else if (a.verb == "emit") {
        out << " " << a.msg_index;
      }
      out << "\n";
    }
  }
  return out.str();
}

const Device* find_device(const Scenario& s, const std::string& id) {
  for (const Device& d : s.devices) {
    if (d.id == id) return &d;
  }
  return nullptr;
}

const Channel* find_channel(const Scenario& s, const std::string& id) {
  for (const Channel& c : s.channels) {
    if (c.id == id) return &c;
  }
  return nullptr;
}

const Link* find_link(const Scenario& s, const std::string& a,
                      const std::string& b) {
  for (const Link& l : s.links) {
    if ((l.device_a == a && l.device_b == b) ||
        (l.device_a == b && l.device_b == a)) {
      return &l;
    }
  }
  return nullptr;
}

namespace {

void check_group_endpoints(const Scenario& s, const Channel& ch,
                           const std::string& path,
                           std::vector<std::string>& out) {
  if (!find_device(s, ch.sender)) {
    out.push_back(path + ".sender: device '" + ch.sender + "' not declared");
  }
  if (ch.receivers.empty()) {
    out.push_back(path + ".receivers: must name at least one device");
  }
  std::set<std::string> uniq;
  for (size_t k = 0; k < ch.receivers.size(); ++k) {
    const std::string& r = ch.receivers[k];
    std::string rp = path + ".receivers[" + std::to_string(k) + "]";
    if (!find_device(s, r)) {
      out.push_back(rp + ": device '" + r + "' not declared");
      continue;
    }
    if (r == ch.sender) out.push_back(rp + ": receiver equals sender");
    if (!uniq.insert(r).second) out.push_back(rp + ": duplicate receiver");
    if (find_device(s, ch.sender) && !find_link(s, ch.sender, r)) {
      out.push_back(rp + ": no link between '" + ch.sender + "' and '" + r + "'");
    }
  }
}

}  // namespace

std::vector<std::string> validate(const Scenario& s) {
  std::vector<std::string> out;
  if (s.tick_limit == 0) out.push_back("tick_limit: must be at least 1");

  std::set<std::string> device_ids;
  for (size_t i = 0; i < s.devices.size(); ++i) {
    const Device& d = s.devices[i];
    std::string path = "devices[" + std::to_string(i) + "]";
    if (d.id.empty()) out.push_back(path + ".id: must not be empty");
    if (!device_ids.insert(d.id).second) {
      out.push_back(path + ".id: duplicate device '" + d.id + "'");
    }
    if (d.role != "master" && d.role != "slave" && d.role != "peer") {
      out.push_back(path + ".role: unknown role '" + d.role + "'");
    }
  }

  std::set<std::pair<std::string, std::string>> link_pairs;
  for (size_t i = 0; i < s.links.size(); ++i) {
    const Link& l = s.links[i];
    std::string path = "links[" + std::to_string(i) + "]";
    for (const std::string& dev : {l.device_a, l.device_b}) {
      if (!find_device(s, dev)) {
        out.push_back(path + ": device '" + dev + "' not declared");
      }
    }
    if (l.device_a == l.device_b) {
      out.push_back(path + ": a link needs two distinct devices");
    }
    auto pair = std::minmax(l.device_a, l.device_b);
    if (!link_pairs.insert({pair.first, pair.second}).second) {
      out.push_back(path + ": duplicate link between '" + l.device_a +
                    "' and '" + l.device_b + "'");
    }
    if (l.loss_rate < 0.0 || l.loss_rate > 1.0) {
      out.push_back(path + ".loss_rate: must be within [0, 1]");
    }
    std::set<std::string> recorded;
    for (size_t r = 0; r < l.adversary.size(); ++r) {
      const AdversaryRule& rule = l.adversary[r];
      std::string rp = path + ".adversary[" + std::to_string(r) + "]";
      if (rule.match_from && *rule.match_from != l.device_a &&
          *rule.match_from != l.device_b) {
        out.push_back(rp + ".match_from: '" + *rule.match_from +
                      "' is not an endpoint of this link");
      }
      if (rule.match_count) {
        if (rule.match_count->first < 1 ||
            rule.match_count->first > rule.match_count->second) {
          out.push_back(rp + ".match_count: need 1 <= lo <= hi");
        }
      }
      if (rule.match_seq && rule.match_seq->first > rule.match_seq->second) {
        out.push_back(rp + ".match_seq: need lo <= hi");
      }
      switch (rule.action) {
        case ActionKind::DELAY:
          if (rule.delay_ticks == 0) {
            out.push_back(rp + ".delay: must be at least 1 tick");
          }
          break;
        case ActionKind::RECORD:
          if (rule.label.empty()) out.push_back(rp + ".record: label required");
          recorded.insert(rule.label);
          break;
        case ActionKind::REPLAY:
          if (!recorded.count(rule.label)) {
            out.push_back(rp + ".replay: label '" + rule.label +
                          "' is not recorded by an earlier rule");
          }
          break;
        case ActionKind::INJECT:
          if (rule.inject_bytes.empty()) {
            out.push_back(rp + ".inject: bytes required");
          }
          break;
        default: break;
      }
    }
  }

  std::set<std::string> channel_ids;
  for (size_t i = 0; i < s.channels.size(); ++i) {
    const Channel& ch = s.channels[i];
    std::string path = "channels[" + std::to_string(i) + "]";
    if (ch.id.empty()) out.push_back(path + ".id: must not be empty");
    if (!channel_ids.insert(ch.id).second) {
      out.push_back(path + ".id: duplicate channel '" + ch.id + "'");
    }
    switch (ch.type) {
      case ChannelType::AGA:
      case ChannelType::P2P: {
        for (const std::string& dev : {ch.device_a, ch.device_b}) {
          if (!find_device(s, dev)) {
            out.push_back(path + ".devices: device '" + dev + "' not declared");
          }
        }
        if (ch.device_a == ch.device_b) {
          out.push_back(path + ".devices: need two distinct devices");
        } else if (find_device(s, ch.device_a) && find_device(s, ch.device_b) &&
                   !find_link(s, ch.device_a, ch.device_b)) {
          out.push_back(path + ".devices: no link between '" + ch.device_a +
                        "' and '" + ch.device_b + "'");
        }
        if (ch.type == ChannelType::AGA) {
          if (ch.enc_key.size() != 16) {
            out.push_back(path + ".enc_key: must be 16 bytes");
          }
          if (ch.mac_key.size() != 32) {
            out.push_back(path + ".mac_key: must be 32 bytes");
          }
        } else {
          if (ch.master_secret.size() != 32) {
            out.push_back(path + ".master_secret: must be 32 bytes");
          }
          if (ch.mode != "m1" && ch.mode != "m2" && ch.mode != "m3") {
            out.push_back(path + ".mode: must be m1, m2 or m3");
          }
          if (ch.prefix_bits < 32 || ch.prefix_bits > 128 ||
              ch.prefix_bits % 8 != 0) {
            out.push_back(path +
                          ".prefix_bits: must be 32..128, a multiple of 8");
          }
          if (ch.window < 1) out.push_back(path + ".window: must be at least 1");
          if (!ch.mac_enabled && ch.mode != "m1") {
            out.push_back(path + ".mac: modes m2 and m3 need the MAC enabled");
          }
        }
        break;
      }
      case ChannelType::BROADCAST: {
        check_group_endpoints(s, ch, path, out);
        if (ch.chain_seed.size() != 32) {
          out.push_back(path + ".chain_seed: must be 32 bytes");
        }
        if (ch.delta < 1) out.push_back(path + ".delta: must be at least 1");
        if (ch.d < 1) out.push_back(path + ".d: must be at least 1");
        if (ch.chain_length < 1) out.push_back(path + ".n: must be at least 1");
        break;
      }
      case ChannelType::EMERGENCY_BASIC:
      case ChannelType::EMERGENCY_REVISED: {
        check_group_endpoints(s, ch, path, out);
        if (ch.u < 1) out.push_back(path + ".u: must be at least 1");
        if (ch.v < 1) out.push_back(path + ".v: must be at least 1");
        if (ch.type == ChannelType::EMERGENCY_REVISED) {
          if (ch.expiries.size() != size_t(ch.u) * ch.v) {
            out.push_back(path + ".expiry_row: need u rows of v times each");
          } else {
            for (uint16_t mi = 0; mi < ch.u; ++mi) {
              for (uint16_t j = 1; j < ch.v; ++j) {
                if (ch.expiries[size_t(mi) * ch.v + j] <=
                    ch.expiries[size_t(mi) * ch.v + j - 1]) {
                  out.push_back(path + ".expiry_row[" + std::to_string(mi + 1) +
                                "]: times must strictly increase");
                  break;
                }
              }
            }
          }
        } else if (!ch.expiries.empty()) {
          out.push_back(path + ".expiry_row: only valid for emergency-revised");
        }
        if (!ch.via.empty()) {
          const Channel* via = find_channel(s, ch.via);
          if (!via) {
            out.push_back(path + ".via: channel '" + ch.via + "' not declared");
          } else if (via->type != ChannelType::BROADCAST) {
            out.push_back(path + ".via: '" + ch.via + "' is not a broadcast channel");
          } else {
            if (via->sender != ch.sender) {
              out.push_back(path + ".via: broadcast sender differs");
            }
            for (const std::string& r : ch.receivers) {
              if (std::find(via->receivers.begin(), via->receivers.end(), r) ==
                  via->receivers.end()) {
                out.push_back(path + ".via: receiver '" + r +
                              "' missing from broadcast channel");
              }
            }
          }
        }
        if (ch.fragment_size < 1) {
          out.push_back(path + ".fragment_size: must be at least 1");
        }
        break;
      }
    }
  }

  // Frames carry no channel id, so demultiplexing is by (device pair, frame
  // class); each class gets at most one channel per pair.
  std::set<std::string> pair_class;
  for (size_t i = 0; i < s.channels.size(); ++i) {
    const Channel& ch = s.channels[i];
    std::string path = "channels[" + std::to_string(i) + "]";
    auto claim = [&](const std::string& cls, const std::string& a,
                     const std::string& b) {
      auto pair = std::minmax(a, b);
      if (!pair_class.insert(cls + "|" + pair.first + "|" + pair.second)
               .second) {
        out.push_back(path + ": another " + cls +
                      " channel already connects '" + a + "' and '" + b + "'");
      }
    };
    switch (ch.type) {
      case ChannelType::AGA:
        claim("aga", ch.device_a, ch.device_b);
        break;
      case ChannelType::P2P:
        claim("p2p", ch.device_a, ch.device_b);
        break;
      case ChannelType::BROADCAST:
        for (const std::string& r : ch.receivers) claim("broadcast", ch.sender, r);
        break;
      case ChannelType::EMERGENCY_BASIC:
      case ChannelType::EMERGENCY_REVISED:
        for (const std::string& r : ch.receivers) claim("emergency", ch.sender, r);
        break;
    }
  }

  // Broadcast channels that carry a commitment table carry nothing else, and
  // carry it for exactly one emergency channel.
  std::set<std::string> table_carriers;
  for (size_t i = 0; i < s.channels.size(); ++i) {
    const Channel& ch = s.channels[i];
    if (ch.via.empty()) continue;
    if (!table_carriers.insert(ch.via).second) {
      out.push_back("channels[" + std::to_string(i) + "].via: '" + ch.via +
                    "' already carries another channel's table");
    }
  }

  for (size_t i = 0; i < s.traffic.size(); ++i) {
    const TrafficAction& a = s.traffic[i];
    std::string path = "traffic[" + std::to_string(i) + "]";
    if (!find_device(s, a.device)) {
      out.push_back(path + ".device: '" + a.device + "' not declared");
      continue;
    }
    const Channel* ch = find_channel(s, a.channel);
    if (!ch) {
      out.push_back(path + ".channel: '" + a.channel + "' not declared");
      continue;
    }
    if (a.tick > s.tick_limit) {
      out.push_back(path + ".tick: beyond tick_limit");
    }
    auto endpoint_pair = [&]() {
      if (a.device != ch->device_a && a.device != ch->device_b) {
        out.push_back(path + ".device: '" + a.device + "' is not an endpoint of '" +
                      a.channel + "'");
      }
    };
    auto must_be_sender = [&]() {
      if (a.device != ch->sender) {
        out.push_back(path + ".device: only the sender '" + ch->sender +
                      "' may do this");
      }
    };
    if (a.verb == "send") {
      if (ch->type != ChannelType::AGA && ch->type != ChannelType::P2P) {
        out.push_back(path + ".verb: 'send' needs an aga or p2p channel");
      } else {
        endpoint_pair();
        if (ch->type == ChannelType::AGA &&
            (a.payload.empty() || a.payload.size() % 16 != 0)) {
          out.push_back(path +
                        ".payload: aga payloads are a positive multiple of 16 bytes");
        }
      }
    } else if (a.verb == "send_auth" || a.verb == "passthrough" ||
               a.verb == "sync") {
      if (ch->type != ChannelType::P2P) {
        out.push_back(path + ".verb: '" + a.verb + "' needs a p2p channel");
      } else {
        endpoint_pair();
      }
    } else if (a.verb == "bcast") {
      if (ch->type != ChannelType::BROADCAST) {
        out.push_back(path + ".verb: 'bcast' needs a broadcast channel");
      } else {
        must_be_sender();
        if (table_carriers.count(ch->id)) {
          out.push_back(path + ": channel '" + ch->id +
                        "' carries a commitment table; no app traffic allowed");
        }
        if (a.payload.size() > 60000) {
          out.push_back(path + ".payload: too large for one packet");
        }
      }
    } else if (a.verb == "disclose") {
      if (ch->type != ChannelType::BROADCAST) {
        out.push_back(path + ".verb: 'disclose' needs a broadcast channel");
      } else {
        must_be_sender();
      }
    } else if (a.verb == "emit") {
      if (ch->type != ChannelType::EMERGENCY_BASIC &&
          ch->type != ChannelType::EMERGENCY_REVISED) {
        out.push_back(path + ".verb: 'emit' needs an emergency channel");
      } else {
        must_be_sender();
        if (a.msg_index < 1 || a.msg_index > ch->u) {
          out.push_back(path + ".msg_index: out of range 1.." +
                        std::to_string(ch->u));
        }
      }
    } else if (a.verb == "install") {
      if (ch->type != ChannelType::EMERGENCY_BASIC &&
          ch->type != ChannelType::EMERGENCY_REVISED) {
        out.push_back(path + ".verb: 'install' needs an emergency channel");
      } else {
        must_be_sender();
        if (ch->via.empty()) {
          out.push_back(path + ": channel '" + ch->id +
                        "' has no 'via' broadcast channel to carry the table");
        }
      }
    } else {
      out.push_back(path + ".verb: unknown verb '" + a.verb + "'");
    }
  }
  return out;
}

}  // namespace sscada::scn
