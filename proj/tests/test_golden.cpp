// The checked-in scenario files and their transcripts are the contract: a
// byte changes here only when a deliberate behavior change regenerates them
// (tools/regen_golden).

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <sstream>
#include <string>

#include "sscada/demos.hpp"
#include "sscada/scenario.hpp"
#include "sscada/sim.hpp"

using namespace sscada;

namespace {

std::string slurp(const std::string& rel) {
  std::string path = std::string(SSCADA_SOURCE_DIR) + "/" + rel;
  std::ifstream in(path, std::ios::binary);
  REQUIRE_MESSAGE(bool(in), path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("scenario files are the canonical form of the builders") {
  for (const std::string& name : demos::scenario_names()) {
    CAPTURE(name);
    std::string text = slurp("scenarios/" + name + ".scn");
    scn::Scenario built = demos::build(name);
    CHECK(scn::serialize(built) == text);
    scn::Scenario parsed = scn::parse_scenario(text);
    CHECK(parsed == built);
    CHECK(scn::validate(parsed).empty());
  }
}

TEST_CASE("golden transcripts are byte-identical across repeated runs") {
  for (const std::string& name : demos::scenario_names()) {
    CAPTURE(name);
    std::string golden = slurp("tests/golden/" + name + ".transcript");
    scn::Scenario s = scn::parse_scenario(slurp("scenarios/" + name + ".scn"));
    CHECK(sim::to_text(sim::sim_run(s)) == golden);
    CHECK(sim::to_text(sim::sim_run(s)) == golden);  // and again
  }
}
