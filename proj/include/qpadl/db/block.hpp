#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "qpadl/common/bytes.hpp"
#include "qpadl/common/rng.hpp"
#include "qpadl/common/types.hpp"
#include "qpadl/crypto/signature.hpp"
#include "qpadl/db/matrix.hpp"
#include "qpadl/db/record.hpp"
#include "qpadl/pow/lbp.hpp"

namespace qpadl::db {

// One puzzle carried by a block. For HCT `difficulty` is kappa, for LBP it is
// the lattice dimension.
struct BoundPuzzle {
  PowKind kind = PowKind::kNone;
  std::uint32_t difficulty = 0;
  Bytes bytes;
  bool operator==(const BoundPuzzle&) const = default;
};

// Block layout:
//   record (560) | u64 validity window | u8 puzzle count |
//   { u8 kind | u32 difficulty | u32 length | bytes }* | u16 sig length | sig |
//   zero padding to b bits
struct DbEntryBlock {
  SpectrumRecord record;
  std::uint64_t validity_window = 0;
  std::vector<BoundPuzzle> puzzles;
  Bytes issuer_sig;

  std::size_t encoded_size() const;
  Bytes encode(std::size_t block_bytes) const;  // Errc::kCapacity when it does not fit
  static DbEntryBlock decode(ByteSpan block);
  bool operator==(const DbEntryBlock&) const = default;
};

Bytes encode_puzzles(std::span<const BoundPuzzle> puzzles);
std::vector<BoundPuzzle> decode_puzzles(ByteReader& reader);

// Message covered by the issuer signature: theta, the puzzle section and the
// validity window.
Bytes puzzle_signing_message(std::uint64_t theta, std::span<const BoundPuzzle> puzzles,
                             std::uint64_t validity_window);

// Puzzle-binding key shared by the PSD replicas.
struct PuzzleIssuer {
  std::shared_ptr<const crypto::SignatureScheme> scheme;
  crypto::SigningKeyPair keys;

  static PuzzleIssuer generate(crypto::SignatureBackend backend, Rng& rng);
  Bytes sign(std::uint64_t theta, std::span<const BoundPuzzle> puzzles, std::uint64_t validity_window,
             Rng& rng) const;
};

enum class PuzzleCheck { kOk, kBadSignature, kStale };

PuzzleCheck check_puzzles(const crypto::SignatureScheme& scheme, ByteSpan public_key, std::uint64_t theta,
                          std::span<const BoundPuzzle> puzzles, std::uint64_t validity_window,
                          ByteSpan signature, std::uint64_t current_window);

// Index of the validity window containing `unix_seconds`.
std::uint64_t validity_window_at(std::uint64_t unix_seconds, std::uint64_t window_seconds = 3600);

struct BindOptions {
  std::uint64_t validity_window = 0;
  std::uint32_t hct_leaves = 2;
  pow::LbpGenOptions lbp;
  // Issuer-side solvability resampling is only affordable at low dimension.
  std::uint32_t lbp_solvable_max_dimension = 48;
};

// Fresh puzzles (one per difficulty) plus a signature for every row. Returns
// a new matrix; `db` is left untouched. An empty difficulty list returns db.
DbMatrix puzzle_bind(const DbMatrix& db, const PuzzleIssuer& issuer, PowKind kind,
                     std::span<const std::uint32_t> difficulties, const BindOptions& options, Rng& rng);

// Generates one serialized puzzle of the given kind.
Bytes generate_puzzle(PowKind kind, std::uint32_t difficulty, const BindOptions& options, Rng& rng);

// Lays the records out by index; rows without a record get an unavailable
// placeholder at the minimum power. Duplicate indices are rejected.
DbMatrix db_build(std::span<const SpectrumRecord> records, const RecordLimits& limits, std::uint32_t block_bits);

}  // namespace qpadl::db
