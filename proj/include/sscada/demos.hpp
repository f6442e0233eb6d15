#pragma once

// Canned scenarios: the golden attack/defense runs shipped under scenarios/
// and the narratives the CLI prints for `demo <name>`.

#include <string>
#include <vector>

#include "sscada/scenario.hpp"
#include "sscada/sim.hpp"

namespace sscada::demos {

// Every shipped scenario, in file order.
std::vector<std::string> scenario_names();

// Builds one by name; ScriptError on an unknown name.
scn::Scenario build(const std::string& name);

std::vector<std::string> demo_names();

// Scenario(s) a demo runs, in order; ScriptError on an unknown demo.
std::vector<std::string> demo_scenarios(const std::string& demo);

// Human narrative: milestone annotations over the transcript.
std::string narrate(const std::string& scenario_name, const sim::Transcript& t);

}  // namespace sscada::demos
