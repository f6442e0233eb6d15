#pragma once

// Commitment-based emergency channels. The sender pre-publishes hash
// commitments r_{i,j} over an authenticated broadcast; revealing a preimage
// later authenticates message e_i once. The basic channel binds (e_i, nonce);
// the revised channel adds an expiration time to the preimage, buying weak
// freshness at the cost of emission windows.

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "sscada/bytes.hpp"
#include "sscada/crypto.hpp"
#include "sscada/rng.hpp"

namespace sscada::emg {

inline constexpr uint8_t kTableType = 0x43;
inline constexpr uint8_t kRevealType = 0x45;

struct Commitment {
  Digest r{};
  std::optional<uint64_t> expiry;
  bool used = false;
};

struct Table {
  uint16_t u = 0;
  uint16_t v = 0;
  std::vector<Commitment> entries;  // row-major, (i,j) 1-based
  uint32_t generation = 0;

  bool revised() const { return !entries.empty() && entries[0].expiry.has_value(); }
  Commitment& at(uint16_t i, uint16_t j) { return entries[size_t(i - 1) * v + (j - 1)]; }
  const Commitment& at(uint16_t i, uint16_t j) const {
    return entries[size_t(i - 1) * v + (j - 1)];
  }

  Bytes serialize() const;  // [0x43][BE16 u][BE16 v][u*v x (r | opt BE64 T)]
  static Table parse(std::span<const uint8_t> wire);
};

struct Sender {
  uint16_t u = 0;
  uint16_t v = 0;
  bool revised = false;
  std::vector<Nonce16> nonces;              // u*v, row-major
  std::vector<uint64_t> expiries;           // u*v when revised, else empty
  std::vector<bool> used;                   // u*v
  uint32_t generation = 0;
};

struct Reveal {
  uint16_t msg_index = 0;  // i
  uint16_t use_index = 0;  // j
  Nonce16 nonce{};
  std::optional<uint64_t> expiry;

  Bytes serialize() const;  // [0x45][BE16 i][BE16 j][nonce][opt BE64 T]
  static Reveal parse(std::span<const uint8_t> wire);  // mode from length
};

// The commitment hash: H(BE16(i) | nonce) or H(BE16(i) | nonce | BE64(T)).
Digest commitment_hash(uint16_t msg_index, const Nonce16& nonce,
                       std::optional<uint64_t> expiry);

// expiry_grid empty selects the basic channel; otherwise u*v times, strictly
// increasing within each message's row.
std::pair<Sender, Table> emg_commit(Rng& rng, uint16_t u, uint16_t v,
                                    const std::vector<uint64_t>& expiry_grid = {});

struct Receiver {
  std::optional<Table> table;
};

// Installs a freshly authenticated table, dropping any previous generation.
void emg_install(Receiver& receiver, const Table& table);

// Basic: uniformly random unused use slot. Revised: the unused slot with the
// earliest expiry satisfying now + est_tx < T.
Reveal emg_emit(Sender& sender, uint16_t msg_index, uint64_t now, Rng& rng,
                uint64_t est_tx = 0);

enum class AcceptStatus { ACCEPTED, NO_MATCH, ALREADY_USED, EXPIRED };

const char* accept_status_name(AcceptStatus s);

struct AcceptResult {
  AcceptStatus status = AcceptStatus::NO_MATCH;
  Bytes payload;  // e_i = BE16(i), set on ACCEPTED
};

AcceptResult emg_accept(Receiver& receiver, const Reveal& reveal, uint64_t now);

// Re-commit policy: a new generation is due when any message is down to one
// unused slot or fewer.
bool needs_recommit(const Sender& sender);

// Fragment a serialized table for transport in bounded broadcast payloads.
// Each fragment: [BE16 seq][BE16 total][chunk].
std::vector<Bytes> fragment(std::span<const uint8_t> data, size_t max_chunk);

class Reassembler {
 public:
  // Returns the reassembled bytes once every fragment has arrived.
  std::optional<Bytes> feed(std::span<const uint8_t> fragment);

 private:
  std::vector<std::optional<Bytes>> parts_;
  size_t received_ = 0;
};

}  // namespace sscada::emg
