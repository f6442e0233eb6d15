// sscada: scenario runner, canned demos, key-chain utility.
//
// Exit codes: 0 ran to completion, 1 usage/parse/validation failure,
// 2 internal invariant violation.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "sscada/crypto.hpp"
#include "sscada/demos.hpp"
#include "sscada/errors.hpp"
#include "sscada/report.hpp"
#include "sscada/scenario.hpp"
#include "sscada/sim.hpp"

using namespace sscada;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
  if (!out) throw Error("cannot write '" + path + "'");
}

int cmd_run(const std::string& path, std::optional<uint64_t> seed,
            const std::string& transcript_path, const std::string& json_path) {
  scn::Scenario s;
  try {
    s = scn::parse_scenario(slurp(path));
  } catch (const ParseError& e) {
    std::cerr << path << ": " << e.what() << "\n";
    return 1;
  }
  if (seed) s.seed = *seed;
  auto problems = scn::validate(s);
  if (!problems.empty()) {
    for (const std::string& p : problems) std::cerr << path << ": " << p << "\n";
    return 1;
  }

  sim::Transcript t = sim::sim_run(s);
  if (!transcript_path.empty()) spit(transcript_path, sim::to_text(t));

  rpt::RunReport report = rpt::analyze(s, t);
  report.transcript_path = transcript_path;
  if (!json_path.empty()) spit(json_path, rpt::to_json(report));
  std::cout << rpt::to_text(report);
  return 0;
}

int cmd_keychain(uint32_t length, const std::string& seed_hex) {
  Bytes seed_bytes;
  try {
    seed_bytes = from_hex(seed_hex);
  } catch (const Error& e) {
    std::cerr << "keychain: bad --seed: " << e.what() << "\n";
    return 1;
  }
  if (seed_bytes.size() != 32) {
    std::cerr << "keychain: --seed must be 32 bytes of hex, got "
              << seed_bytes.size() << "\n";
    return 1;
  }
  std::vector<ChainKey> chain = chain_generate(take<32>(seed_bytes), length);
  for (const ChainKey& k : chain) {
    std::cout << "K_" << k.index << " " << to_hex(k.bytes) << "\n";
  }
  // anchor check: K_0 must be the n-fold hash of the seed
  if (!chain_verify(chain.front(), chain.back())) {
    std::cerr << "keychain: self-check failed\n";
    return 2;
  }
  std::cout << "chain OK\n";
  return 0;
}

int cmd_demo(const std::string& name) {
  for (const std::string& scenario_name : demos::demo_scenarios(name)) {
    scn::Scenario s = demos::build(scenario_name);
    sim::Transcript t = sim::sim_run(s);
    std::cout << "== scenario " << scenario_name << " (seed " << s.seed
              << ")\n";
    std::cout << demos::narrate(scenario_name, t);
    std::cout << rpt::to_text(rpt::analyze(s, t)) << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sSCADA protocol simulator"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run a scenario file");
  std::string run_path, transcript_path, json_path;
  std::optional<uint64_t> seed_override;
  run->add_option("file", run_path, "scenario file")->required();
  run->add_option("--seed", seed_override, "override the scenario seed");
  run->add_option("--transcript", transcript_path, "write the transcript here");
  run->add_option("--summary-json", json_path, "write a JSON summary here");

  auto* keychain = app.add_subcommand("keychain", "generate a one-way key chain");
  uint32_t length = 0;
  std::string seed_hex;
  keychain->add_option("--length", length, "chain length n (keys K_0..K_n)")
      ->required()
      ->check(CLI::PositiveNumber);
  keychain->add_option("--seed", seed_hex, "32-byte hex seed (K_n)")->required();

  auto* demo = app.add_subcommand("demo", "run a canned demonstration");
  std::string demo_name;
  std::string demo_help;
  for (const std::string& d : demos::demo_names()) {
    if (!demo_help.empty()) demo_help += " | ";
    demo_help += d;
  }
  demo->add_option("name", demo_name, demo_help)
      ->required()
      ->check(CLI::IsMember(demos::demo_names()));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*run) return cmd_run(run_path, seed_override, transcript_path, json_path);
    if (*keychain) return cmd_keychain(length, seed_hex);
    if (*demo) return cmd_demo(demo_name);
  } catch (const ScriptError& e) {
    std::cerr << "script error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
  return 2;  // unreachable
}
