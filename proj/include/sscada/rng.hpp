#pragma once

#include <cstdint>
#include <span>

namespace sscada {

// Injected randomness source. Simulation runs use the deterministic
// counter-based generator below; anything deployed for real would plug in an
// OS-backed source behind the same interface.
class Rng {
 public:
  virtual ~Rng() = default;
  virtual uint64_t next_u64() = 0;

  void fill(std::span<uint8_t> out);
  double next_unit();                // uniform in [0, 1)
  uint64_t below(uint64_t bound);    // uniform in [0, bound), bound > 0
};

class SplitMix64 final : public Rng {
 public:
  explicit SplitMix64(uint64_t seed) : state_(seed) {}
  uint64_t next_u64() override;

 private:
  uint64_t state_;
};

}  // namespace sscada
