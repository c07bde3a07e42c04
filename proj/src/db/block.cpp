#include "qpadl/db/block.hpp"

#include <limits>

#include "qpadl/common/error.hpp"
#include "qpadl/pow/hct.hpp"

namespace qpadl::db {

Bytes encode_puzzles(std::span<const BoundPuzzle> puzzles) {
  if (puzzles.size() > 255) fail(Errc::kCapacity, "too many puzzles in one block");
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(puzzles.size()));
  for (const auto& p : puzzles) {
    w.u8(static_cast<std::uint8_t>(p.kind));
    w.u32(p.difficulty);
    w.blob(p.bytes);
  }
  return std::move(w).take();
}

std::vector<BoundPuzzle> decode_puzzles(ByteReader& r) {
  const std::size_t count = r.u8();
  std::vector<BoundPuzzle> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    BoundPuzzle p;
    const auto kind = r.u8();
    if (kind != static_cast<std::uint8_t>(PowKind::kHct) && kind != static_cast<std::uint8_t>(PowKind::kLbp)) {
      fail(Errc::kFormat, "unknown puzzle kind");
    }
    p.kind = static_cast<PowKind>(kind);
    p.difficulty = r.u32();
    p.bytes = r.blob();
    out.push_back(std::move(p));
  }
  return out;
}

std::size_t DbEntryBlock::encoded_size() const {
  std::size_t n = SpectrumRecord::kSerializedBytes + 8 + 1 + 2 + issuer_sig.size();
  for (const auto& p : puzzles) n += 1 + 4 + 4 + p.bytes.size();
  return n;
}

Bytes DbEntryBlock::encode(std::size_t block_bytes) const {
  const std::size_t need = encoded_size();
  if (need > block_bytes) {
    fail(Errc::kCapacity, "block content needs " + std::to_string(need) + " bytes, block holds " +
                              std::to_string(block_bytes));
  }
  if (issuer_sig.size() > std::numeric_limits<std::uint16_t>::max()) fail(Errc::kCapacity, "signature too long");
  ByteWriter w(block_bytes);
  w.raw(record.serialize());
  w.u64(validity_window);
  w.raw(encode_puzzles(puzzles));
  w.u16(static_cast<std::uint16_t>(issuer_sig.size()));
  w.raw(issuer_sig);
  w.zeros(block_bytes - w.size());
  return std::move(w).take();
}

DbEntryBlock DbEntryBlock::decode(ByteSpan block) {
  ByteReader r(block);
  DbEntryBlock b;
  b.record = SpectrumRecord::deserialize(r.raw(SpectrumRecord::kSerializedBytes));
  b.validity_window = r.u64();
  b.puzzles = decode_puzzles(r);
  const std::size_t sig_len = r.u16();
  auto sig = r.raw(sig_len);
  b.issuer_sig.assign(sig.begin(), sig.end());
  for (auto byte : r.raw(r.remaining())) {
    if (byte != 0) fail(Errc::kFormat, "nonzero block padding");
  }
  return b;
}

Bytes puzzle_signing_message(std::uint64_t theta, std::span<const BoundPuzzle> puzzles,
                             std::uint64_t validity_window) {
  ByteWriter w;
  w.raw(as_bytes("qpadl-puzzle"));
  w.u64(theta);
  w.raw(encode_puzzles(puzzles));
  w.u64(validity_window);
  return std::move(w).take();
}

PuzzleIssuer PuzzleIssuer::generate(crypto::SignatureBackend backend, Rng& rng) {
  PuzzleIssuer issuer;
  issuer.scheme = crypto::make_signature_scheme(backend);
  issuer.keys = issuer.scheme->keygen(rng);
  return issuer;
}

Bytes PuzzleIssuer::sign(std::uint64_t theta, std::span<const BoundPuzzle> puzzles, std::uint64_t validity_window,
                         Rng& rng) const {
  return scheme->sign(keys.secret_key, puzzle_signing_message(theta, puzzles, validity_window), rng);
}

PuzzleCheck check_puzzles(const crypto::SignatureScheme& scheme, ByteSpan public_key, std::uint64_t theta,
                          std::span<const BoundPuzzle> puzzles, std::uint64_t validity_window,
                          ByteSpan signature, std::uint64_t current_window) {
  if (!scheme.verify(public_key, puzzle_signing_message(theta, puzzles, validity_window), signature)) {
    return PuzzleCheck::kBadSignature;
  }
  return validity_window == current_window ? PuzzleCheck::kOk : PuzzleCheck::kStale;
}

std::uint64_t validity_window_at(std::uint64_t unix_seconds, std::uint64_t window_seconds) {
  if (window_seconds == 0) fail(Errc::kParameter, "validity window length must be positive");
  return unix_seconds / window_seconds;
}

Bytes generate_puzzle(PowKind kind, std::uint32_t difficulty, const BindOptions& options, Rng& rng) {
  switch (kind) {
    case PowKind::kHct:
      return pow::hct_gen(256, difficulty, options.hct_leaves, rng).serialize();
    case PowKind::kLbp: {
      pow::LbpGenOptions lbp = options.lbp;
      lbp.ensure_solvable = lbp.ensure_solvable && difficulty <= options.lbp_solvable_max_dimension;
      return pow::lbp_gen(difficulty, rng, lbp).serialize();
    }
    case PowKind::kNone:
      break;
  }
  fail(Errc::kParameter, "puzzle kind required");
}

DbMatrix puzzle_bind(const DbMatrix& db, const PuzzleIssuer& issuer, PowKind kind,
                     std::span<const std::uint32_t> difficulties, const BindOptions& options, Rng& rng) {
  if (difficulties.empty()) return db;
  DbMatrix out = db;
  out.pow = kind;
  for (std::uint64_t theta = 0; theta < db.rows(); ++theta) {
    DbEntryBlock block = DbEntryBlock::decode(db.row_bytes(theta));
    block.validity_window = options.validity_window;
    block.puzzles.clear();
    for (auto difficulty : difficulties) {
      block.puzzles.push_back({kind, difficulty, generate_puzzle(kind, difficulty, options, rng)});
    }
    block.issuer_sig = issuer.sign(theta, block.puzzles, block.validity_window, rng);
    out.set_row(theta, block.encode(db.block_bytes()));
  }
  return out;
}

DbMatrix db_build(std::span<const SpectrumRecord> records, const RecordLimits& limits, std::uint32_t block_bits) {
  const RowMajorIndex index(limits.dims);
  DbMatrix db(index.row_count(), block_bits);
  std::vector<bool> seen(index.row_count(), false);
  for (const auto& rec : records) {
    validate(rec, limits);
    const auto theta = index.encode(rec.coord, rec.channel, rec.time_window);
    if (seen[theta]) fail(Errc::kInput, "duplicate record for row " + std::to_string(theta));
    seen[theta] = true;
    DbEntryBlock block;
    block.record = rec;
    db.set_row(theta, block.encode(db.block_bytes()));
  }
  for (std::uint64_t theta = 0; theta < index.row_count(); ++theta) {
    if (seen[theta]) continue;
    DbEntryBlock block;
    block.record = default_record(theta, index, limits.eirp_min_centi_dbm);
    db.set_row(theta, block.encode(db.block_bytes()));
  }
  return db;
}

}  // namespace qpadl::db
