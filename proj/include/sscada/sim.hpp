#pragma once

// Deterministic discrete-event simulator. Devices host protocol state
// machines; links add latency, seeded loss, and a scripted adversary; every
// send, man-in-the-middle action, and delivery verdict lands in a transcript
// that is a pure function of (scenario, seed).

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sscada/bytes.hpp"
#include "sscada/scenario.hpp"

namespace sscada::sim {

struct TranscriptEvent {
  uint64_t tick = 0;
  std::string actor;    // device id, or "adversary"
  std::string dir;      // "tx" | "rx" | "mitm"
  Bytes bytes;          // may be empty for synthetic state events
  std::string verdict;
};

struct Transcript {
  std::vector<TranscriptEvent> events;
};

// Line form `tick|actor|dir|hex|verdict`, then a `-- summary` block counting
// verdicts by their base name (everything before the parenthetical).
std::string to_text(const Transcript& t);

// Global tick through a device's skewed clock, clamped at zero.
uint64_t clock_read(uint64_t now, const scn::Device& device);

struct Delivery {
  uint64_t deliver_at = 0;
  Bytes bytes;
  bool injected = false;
  bool replayed = false;
  bool delayed = false;
};

struct Tap {  // adversary-side transcript material
  uint64_t tick = 0;
  Bytes bytes;
  std::string verdict;
};

struct AdversaryState {
  std::vector<uint64_t> hits;  // per rule: predicate matches so far
  std::map<std::string, std::vector<Bytes>> recordings;
};

struct ApplyResult {
  std::vector<Delivery> deliveries;
  std::vector<Tap> taps;
};

// Runs one frame through the script. `now` is the nominal arrival tick; DELAY
// and `after` offsets add to it. Rules fire in order, each at most once per
// frame; a rule's occurrence counter advances on every predicate match, so a
// count window 1..3 hits the first three matching frames and spares the
// fourth. Injected and replayed deliveries are listed before the (possibly
// mutated, possibly dropped) original, so they win FIFO ties at equal ticks.
// Throws ScriptError when REPLAY names a recording that does not exist yet.
ApplyResult adversary_apply(const std::vector<scn::AdversaryRule>& script,
                            AdversaryState& state, const Bytes& frame,
                            uint64_t now, const std::string& from);

// Validates the scenario (throws Error listing all problems), then processes
// events in (tick, insertion-order) priority until the queue drains or an
// event would pass tick_limit.
Transcript sim_run(const scn::Scenario& scenario);

}  // namespace sscada::sim
