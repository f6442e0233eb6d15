#include "sscada/report.hpp"

#include <sstream>

#include <json.hpp>

namespace sscada::rpt {

namespace {

// True when `marker` appears as one comma-separated token of the verdict's
// parenthetical.
bool has_marker(const std::string& verdict, const std::string& marker) {
  size_t open = verdict.find('(');
  if (open == std::string::npos || verdict.back() != ')') return false;
  std::string inside = verdict.substr(open + 1, verdict.size() - open - 2);
  size_t pos = 0;
  while (true) {
    size_t comma = inside.find(',', pos);
    std::string tok = comma == std::string::npos
                          ? inside.substr(pos)
                          : inside.substr(pos, comma - pos);
    if (tok == marker) return true;
    if (comma == std::string::npos) return false;
    pos = comma + 1;
  }
}

bool verdict_delivers(const std::string& base) {
  return base == "ACCEPTED" || base == "MAC_FAILED" ||
         base == "MAC_FAILED_LOGGED" || base == "AUTH_ACCEPTED" ||
         base == "AUTHENTIC" || base == "EMG_ACCEPTED";
}

bool verdict_authenticates(const std::string& base) {
  return base == "ACCEPTED" || base == "AUTH_ACCEPTED" || base == "AUTHENTIC" ||
         base == "EMG_ACCEPTED" || base == "SYNC_OK";
}

}  // namespace

RunReport analyze(const scn::Scenario& scenario, const sim::Transcript& t) {
  RunReport r;
  r.events = t.events.size();

  bool has_replay = false, has_inject = false, has_delay = false;
  for (const scn::Link& l : scenario.links) {
    for (const scn::AdversaryRule& rule : l.adversary) {
      if (rule.action == scn::ActionKind::REPLAY) has_replay = true;
      if (rule.action == scn::ActionKind::INJECT) has_inject = true;
      if (rule.action == scn::ActionKind::DELAY) has_delay = true;
    }
  }

  uint64_t stale_delivered = 0, forged_accepted = 0, delayed_accepted = 0;
  for (const sim::TranscriptEvent& e : t.events) {
    std::string base = e.verdict.substr(0, e.verdict.find('('));
    r.verdicts[base]++;
    if (verdict_delivers(base) && has_marker(e.verdict, "stale")) {
      stale_delivered++;
    }
    if (verdict_authenticates(base) && has_marker(e.verdict, "injected")) {
      forged_accepted++;
    }
    if (verdict_authenticates(base) && has_marker(e.verdict, "delayed")) {
      delayed_accepted++;
    }
  }

  if (has_replay) {
    r.attack_lines.push_back(
        stale_delivered > 0
            ? "attack: SUCCEEDED (stale plaintext delivered)"
            : "attack: DEFENDED (0 replayed frames accepted)");
  }
  if (has_inject) {
    r.attack_lines.push_back(
        forged_accepted > 0
            ? "attack: SUCCEEDED (forged packet authenticated)"
            : "attack: DEFENDED (0 forged packets authenticated)");
  }
  if (has_delay) {
    r.attack_lines.push_back(
        delayed_accepted > 0
            ? "attack: SUCCEEDED (delayed message accepted)"
            : "attack: DEFENDED (0 delayed messages accepted)");
  }
  return r;
}

std::string to_text(const RunReport& r) {
  std::ostringstream out;
  out << "events: " << r.events << "\n";
  if (!r.transcript_path.empty()) {
    out << "transcript: " << r.transcript_path << "\n";
  }
  out << "verdicts:\n";
  for (const auto& [name, n] : r.verdicts) {
    out << "  " << name << " " << n << "\n";
  }
  for (const std::string& line : r.attack_lines) out << line << "\n";
  return out.str();
}

std::string to_json(const RunReport& r) {
  nlohmann::ordered_json j;
  j["events"] = r.events;
  if (!r.transcript_path.empty()) j["transcript"] = r.transcript_path;
  j["verdicts"] = nlohmann::ordered_json::object();
  for (const auto& [name, n] : r.verdicts) j["verdicts"][name] = n;
  j["attacks"] = r.attack_lines;
  return j.dump(2) + "\n";
}

}  // namespace sscada::rpt
