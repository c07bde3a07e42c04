#pragma once

#include <array>
#include <atomic>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "qpadl/db/matrix.hpp"
#include "qpadl/pir/bitvec.hpp"

namespace qpadl::pir {

using OopSeed = std::array<std::uint8_t, 16>;

// Expands a seed to the requested number of mask bits.
using OopPrg = std::function<BitVector(const OopSeed&, std::size_t bits)>;

// SHAKE256 over seed || u32 counter blocks.
BitVector oop_prg_shake(const OopSeed& seed, std::size_t bits);
// All-zero mask, for tests of the degenerate protocol.
BitVector oop_prg_zero(const OopSeed& seed, std::size_t bits);

// Public shape of an OOP deployment: the database is cut into n chunks of k
// rows (the last one zero padded). Server i answers online for chunk i and
// masks t-1 further chunks, listed in the order its PRG bits cover them.
struct OopGeometry {
  std::uint64_t rows = 0;
  unsigned n = 0;
  std::uint64_t k = 0;
  unsigned t = 0;
  std::vector<std::vector<unsigned>> mask_chunks;

  // Cyclic layout: server i masks chunks i+1 .. i+t-1 (mod n).
  static OopGeometry cyclic(std::uint64_t rows, unsigned n, unsigned t);
  void validate() const;
  std::size_t mask_bits() const { return static_cast<std::size_t>(k) * (t - 1); }
};

struct OopHandshake {
  std::uint64_t session = 0;
  OopSeed seed{};
};

// Per-server queues of precomputed (S, A) pairs. A handshake pins the next
// pair to a session; each session answers exactly once.
class OopState {
 public:
  OopState(db::DbMatrix db, OopGeometry geometry, OopPrg prg);

  const OopGeometry& geometry() const { return geometry_; }
  const db::DbMatrix& db() const { return db_; }
  const OopPrg& prg() const { return prg_; }

  // Adds count fresh pairs to server i's queue.
  void refill(unsigned server, std::size_t count, Rng& rng);
  std::size_t queue_size(unsigned server) const;

  OopHandshake handshake(unsigned server);
  Bytes respond(unsigned server, std::uint64_t session, const BitVector& q);

  // Database rows read by respond() since construction.
  std::uint64_t online_rows() const { return sync_->online_rows.load(); }

 private:
  struct Entry {
    OopSeed seed{};
    Bytes aggregate;
  };
  struct Pinned {
    unsigned server = 0;
    Bytes aggregate;
  };

  Entry precompute(unsigned server, Rng& rng) const;

  db::DbMatrix db_;
  OopGeometry geometry_;
  OopPrg prg_;
  struct Sync {
    std::mutex mu;
    std::atomic<std::uint64_t> online_rows{0};
  };

  std::vector<std::deque<Entry>> queues_;
  std::map<std::uint64_t, Pinned> pinned_;
  std::set<std::uint64_t> consumed_;
  std::uint64_t next_session_ = 1;
  std::unique_ptr<Sync> sync_ = std::make_unique<Sync>();
};

// t = 0 selects full replication (t = n).
OopState oop_preprocess(const db::DbMatrix& db, unsigned n, unsigned t, std::size_t queue_depth, Rng& rng,
                        OopPrg prg = oop_prg_shake);
OopState oop_preprocess(const db::DbMatrix& db, OopGeometry geometry, std::size_t queue_depth, Rng& rng,
                        OopPrg prg = oop_prg_shake);

// Empty queue is kBackpressure.
OopHandshake oop_offline_handshake(OopState& state, unsigned server);

// One k-bit sub-query per server, restricted to that server's own chunk.
std::vector<BitVector> oop_query_gen(std::uint64_t theta, std::span<const OopSeed> seeds,
                                     const OopGeometry& geometry, const OopPrg& prg = oop_prg_shake);

// Reusing a session is kReplay.
Bytes oop_respond(OopState& state, unsigned server, std::uint64_t session, const BitVector& q);

Bytes oop_reconstruct(std::span<const std::optional<Bytes>> responses);

}  // namespace qpadl::pir
