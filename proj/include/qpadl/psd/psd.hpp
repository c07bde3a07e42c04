#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <utility>
#include <vector>

#include "qpadl/common/bytes.hpp"
#include "qpadl/common/rng.hpp"
#include "qpadl/common/types.hpp"
#include "qpadl/db/block.hpp"
#include "qpadl/db/matrix.hpp"
#include "qpadl/kernels/kernels.hpp"
#include "qpadl/pir/ftr.hpp"
#include "qpadl/pir/oop.hpp"
#include "qpadl/pir/wire.hpp"
#include "qpadl/pol/pol.hpp"

namespace qpadl::psd {

enum class Reject : std::uint8_t { kBadProof = 0x01, kRateLimited = 0x02, kProtocol = 0x03 };

std::string_view reject_name(Reject r) noexcept;

// Set of (e_ID, tag) pairs admitted in the current beacon window. A PSD owns
// one by default; replicas that should enforce a global limit share one.
class PolLog {
 public:
  // Inserts the pair; false if an equal pair was already recorded.
  bool admit(const Digest& event_id, const Digest& tag);
  bool contains(const Digest& event_id, const Digest& tag) const;
  // Clears the log when `window` is newer than the last rotation.
  void rotate(std::uint64_t window);
  std::size_t size() const;
  std::uint64_t window() const;

 private:
  mutable std::mutex mu_;
  std::uint64_t window_ = 0;
  std::set<std::pair<Digest, Digest>> seen_;
};

// Request frame: u64 request id | PirMessage | u32 length | PoL.
struct SpectrumQuery {
  std::uint64_t request_id = 0;
  pir::PirMessage query;
  pol::ProofOfLocation pol;

  Bytes encode() const;
  static SpectrumQuery decode(ByteSpan data);
};

// Reply frame: u64 request id | u8 status (0 or a reject code) | PirMessage
// when the status is 0.
struct SpectrumReply {
  std::uint64_t request_id = 0;
  std::optional<Reject> rejection;
  pir::PirMessage response;

  bool accepted() const { return !rejection.has_value(); }
  Bytes encode() const;
  static SpectrumReply decode(ByteSpan data);
};

struct PsdConfig {
  unsigned index = 0;  // server position among the replicas
  PirScheme scheme = PirScheme::kEns;
  std::uint32_t ftr_modulus = pir::kDefaultFtrModulus;
  std::uint64_t beacon_seconds = pol::kBeaconPeriodSeconds;
  // Puzzle rebinding. Replicas share bind_seed so they stay identical.
  PowKind pow = PowKind::kNone;
  std::vector<std::uint32_t> difficulties;
  std::uint64_t puzzle_window_seconds = 3600;
  std::uint64_t bind_seed = 0;
  db::BindOptions bind;
  // OOP deployments.
  std::optional<pir::OopGeometry> oop_geometry;
  std::size_t oop_queue_depth = 4;
};

struct PsdStats {
  std::uint64_t accepted = 0;
  std::uint64_t bad_proof = 0;
  std::uint64_t rate_limited = 0;
  std::uint64_t protocol = 0;
  std::uint64_t pol_verifications = 0;
  std::uint64_t rebinds = 0;
};

// One PSD replica. Requests are handled by a single writer; the PIR work
// fans out to the kernel backend.
class PsdNode {
 public:
  PsdNode(PsdConfig config, db::DbMatrix db, db::PuzzleIssuer issuer, std::shared_ptr<const pol::RingContext> ring,
          std::shared_ptr<const pol::SokBackend> sok, std::shared_ptr<const kernels::Kernel> kernel,
          std::shared_ptr<PolLog> log = nullptr);

  SpectrumReply handle_spectrum_query(const SpectrumQuery& request);
  // Runs the admission checks in arrival order, then answers every admitted
  // query of the batch with one kernel call.
  std::vector<SpectrumReply> handle_batch(std::span<const SpectrumQuery> requests);
  Bytes handle_frame(ByteSpan frame);

  // Advances the clock: rotates the PoL log at a beacon window change and
  // rebinds puzzles whose validity window has passed.
  void refresh_puzzles(std::uint64_t now_seconds);

  Bytes sign_puzzle(std::uint64_t theta, std::span<const db::BoundPuzzle> puzzles, std::uint64_t validity_window,
                    Rng& rng) const;

  // OOP offline phase.
  pir::OopHandshake oop_handshake();
  void oop_refill(std::size_t count, Rng& rng);

  const db::DbMatrix& db() const { return db_; }
  const Bytes& public_key() const { return issuer_.keys.public_key; }
  const crypto::SignatureScheme& signature_scheme() const { return *issuer_.scheme; }
  const PsdConfig& config() const { return config_; }
  const PolLog& pol_log() const { return *log_; }
  const PsdStats& stats() const { return stats_; }
  std::uint64_t beacon_window() const { return beacon_window_; }
  std::uint64_t puzzle_window() const { return puzzle_window_; }

 private:
  std::optional<Reject> admit(const SpectrumQuery& request);
  void rebuild_oop(Rng& rng);

  PsdConfig config_;
  db::DbMatrix db_;
  db::PuzzleIssuer issuer_;
  std::shared_ptr<const pol::RingContext> ring_;
  std::shared_ptr<const pol::SokBackend> sok_;
  std::shared_ptr<const kernels::Kernel> kernel_;
  std::shared_ptr<PolLog> log_;
  std::unique_ptr<pir::OopState> oop_;
  std::uint64_t beacon_window_ = 0;
  std::uint64_t puzzle_window_ = 0;
  PsdStats stats_;
};

}  // namespace qpadl::psd
