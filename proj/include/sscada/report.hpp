#pragma once

// Post-run analysis: verdict tallies plus attack/defense lines derived
// solely from transcript events and the adversary script shape.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sscada/scenario.hpp"
#include "sscada/sim.hpp"

namespace sscada::rpt {

struct RunReport {
  uint64_t events = 0;
  std::map<std::string, uint64_t> verdicts;  // base verdict -> count
  std::vector<std::string> attack_lines;
  std::string transcript_path;  // optional, filled by the CLI
};

RunReport analyze(const scn::Scenario& scenario, const sim::Transcript& t);

std::string to_text(const RunReport& r);
std::string to_json(const RunReport& r);

}  // namespace sscada::rpt
