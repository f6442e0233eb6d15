// Regenerates the checked-in scenario files and golden transcripts from the
// builders in demos.cpp. Run from the repository root (or pass it as argv[1])
// after any deliberate change to a scenario or to the transcript format, then
// review the diff.

#include <filesystem>
#include <fstream>
#include <iostream>

#include "sscada/demos.hpp"
#include "sscada/scenario.hpp"
#include "sscada/sim.hpp"

namespace fs = std::filesystem;
using namespace sscada;

static void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  out << content;
  if (!out) {
    std::cerr << "write failed: " << p << "\n";
    std::exit(1);
  }
  std::cout << "wrote " << p.string() << " (" << content.size() << " bytes)\n";
}

int main(int argc, char** argv) {
  fs::path root = argc > 1 ? fs::path(argv[1]) : fs::current_path();
  fs::create_directories(root / "scenarios");
  fs::create_directories(root / "tests" / "golden");

  for (const std::string& name : demos::scenario_names()) {
    scn::Scenario s = demos::build(name);
    write_file(root / "scenarios" / (name + ".scn"), scn::serialize(s));
    write_file(root / "tests" / "golden" / (name + ".transcript"),
               sim::to_text(sim::sim_run(s)));
  }
  return 0;
}
