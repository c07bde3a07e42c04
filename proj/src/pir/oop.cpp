#include "qpadl/pir/oop.hpp"

#include <algorithm>
#include <string>

#include "qpadl/common/error.hpp"
#include "qpadl/crypto/hash.hpp"

namespace qpadl::pir {
namespace {

// XOR of the database rows whose positions in `chunks` (concatenated in list
// order) are set in `mask`. Padding rows past the end of the database are zero.
void fold_chunks(const db::DbMatrix& db, const OopGeometry& g, std::span<const unsigned> chunks,
                 const BitVector& mask, std::vector<std::uint64_t>& acc) {
  const std::size_t words = db.u64_per_row();
  for (std::size_t c = 0; c < chunks.size(); ++c) {
    const std::uint64_t first = std::uint64_t{chunks[c]} * g.k;
    for (std::uint64_t m = 0; m < g.k; ++m) {
      if (!mask.get(c * g.k + m) || first + m >= db.rows()) continue;
      const auto row = db.row(first + m);
      for (std::size_t w = 0; w < words; ++w) acc[w] ^= row[w];
    }
  }
}

Bytes to_block(const std::vector<std::uint64_t>& acc, std::size_t bytes) {
  Bytes out(bytes);
  for (std::size_t i = 0; i < bytes; ++i) out[i] = static_cast<std::uint8_t>(acc[i / 8] >> (8 * (i % 8)));
  return out;
}

}  // namespace

BitVector oop_prg_shake(const OopSeed& seed, std::size_t bits) {
  // One SHAKE256 call per 4 KiB of output, keyed by seed || counter.
  constexpr std::size_t kBlock = 4096;
  const std::size_t bytes = (bits + 7) / 8;
  Bytes stream;
  stream.reserve(bytes);
  for (std::uint32_t counter = 0; stream.size() < bytes; ++counter) {
    ByteWriter in;
    in.raw(seed);
    in.u32(counter);
    const auto chunk = crypto::shake256(in.bytes(), std::min(kBlock, bytes - stream.size()));
    stream.insert(stream.end(), chunk.begin(), chunk.end());
  }
  if (bits % 8 != 0) stream.back() &= static_cast<std::uint8_t>((1u << (bits % 8)) - 1);
  return BitVector::from_bytes(stream, bits);
}

BitVector oop_prg_zero(const OopSeed&, std::size_t bits) { return BitVector(bits); }

OopGeometry OopGeometry::cyclic(std::uint64_t rows, unsigned n, unsigned t) {
  if (n == 0) fail(Errc::kParameter, "OOP needs at least one chunk");
  if (t == 0) t = n;
  OopGeometry g;
  g.rows = rows;
  g.n = n;
  g.k = (rows + n - 1) / n;
  g.t = t;
  g.mask_chunks.resize(n);
  for (unsigned i = 0; i < n; ++i) {
    for (unsigned d = 1; d < t; ++d) g.mask_chunks[i].push_back((i + d) % n);
  }
  g.validate();
  return g;
}

void OopGeometry::validate() const {
  if (n == 0 || rows == 0) fail(Errc::kParameter, "OOP needs rows and chunks");
  if (t == 0 || t > n) fail(Errc::kParameter, "OOP replication must be in [1, n]");
  if (k != (rows + n - 1) / n) fail(Errc::kGeometry, "chunk size must be ceil(rows / n)");
  if (mask_chunks.size() != n) fail(Errc::kGeometry, "one mask chunk list per server");
  for (unsigned i = 0; i < n; ++i) {
    const auto& list = mask_chunks[i];
    if (list.size() != t - 1) fail(Errc::kGeometry, "server must mask t-1 chunks");
    std::set<unsigned> distinct(list.begin(), list.end());
    if (distinct.size() != list.size() || distinct.count(i) || (!list.empty() && *distinct.rbegin() >= n)) {
      fail(Errc::kGeometry, "mask chunks must be distinct, in range and exclude the server's own chunk");
    }
  }
}

OopState::OopState(db::DbMatrix db, OopGeometry geometry, OopPrg prg)
    : db_(std::move(db)), geometry_(std::move(geometry)), prg_(std::move(prg)), queues_(geometry_.n) {
  geometry_.validate();
  if (geometry_.rows != db_.rows()) fail(Errc::kGeometry, "geometry does not match the database");
  if (!prg_) fail(Errc::kParameter, "missing PRG");
}

OopState::Entry OopState::precompute(unsigned server, Rng& rng) const {
  Entry e;
  rng.fill(e.seed);
  const BitVector mask = prg_(e.seed, geometry_.mask_bits());
  std::vector<std::uint64_t> acc(db_.u64_per_row(), 0);
  fold_chunks(db_, geometry_, geometry_.mask_chunks[server], mask, acc);
  e.aggregate = to_block(acc, db_.block_bytes());
  return e;
}

void OopState::refill(unsigned server, std::size_t count, Rng& rng) {
  if (server >= geometry_.n) fail(Errc::kParameter, "server index out of range");
  std::vector<Entry> fresh;
  fresh.reserve(count);
  for (std::size_t i = 0; i < count; ++i) fresh.push_back(precompute(server, rng));
  std::lock_guard lock(sync_->mu);
  for (auto& e : fresh) queues_[server].push_back(std::move(e));
}

std::size_t OopState::queue_size(unsigned server) const {
  if (server >= geometry_.n) fail(Errc::kParameter, "server index out of range");
  std::lock_guard lock(sync_->mu);
  return queues_[server].size();
}

OopHandshake OopState::handshake(unsigned server) {
  if (server >= geometry_.n) fail(Errc::kParameter, "server index out of range");
  std::lock_guard lock(sync_->mu);
  auto& q = queues_[server];
  if (q.empty()) fail(Errc::kBackpressure, "precomputation queue of server " + std::to_string(server) + " is empty");
  OopHandshake h{next_session_++, q.front().seed};
  pinned_.emplace(h.session, Pinned{server, std::move(q.front().aggregate)});
  q.pop_front();
  return h;
}

Bytes OopState::respond(unsigned server, std::uint64_t session, const BitVector& q) {
  if (q.size() != geometry_.k) fail(Errc::kGeometry, "sub-query length differs from chunk size");
  Bytes aggregate;
  {
    std::lock_guard lock(sync_->mu);
    if (consumed_.count(session)) fail(Errc::kReplay, "session " + std::to_string(session) + " already answered");
    auto it = pinned_.find(session);
    if (it == pinned_.end()) fail(Errc::kProtocol, "unknown session " + std::to_string(session));
    if (it->second.server != server) fail(Errc::kProtocol, "session belongs to another server");
    aggregate = std::move(it->second.aggregate);
    pinned_.erase(it);
    consumed_.insert(session);
  }
  std::vector<std::uint64_t> acc(db_.u64_per_row(), 0);
  const unsigned own[] = {server};
  fold_chunks(db_, geometry_, own, q, acc);
  const std::uint64_t first = std::uint64_t{server} * geometry_.k;
  const std::uint64_t end = std::min(db_.rows(), first + geometry_.k);
  sync_->online_rows += end > first ? end - first : 0;
  Bytes out = to_block(acc, db_.block_bytes());
  xor_into(out, aggregate);
  return out;
}

OopState oop_preprocess(const db::DbMatrix& db, unsigned n, unsigned t, std::size_t queue_depth, Rng& rng,
                        OopPrg prg) {
  return oop_preprocess(db, OopGeometry::cyclic(db.rows(), n, t), queue_depth, rng, std::move(prg));
}

OopState oop_preprocess(const db::DbMatrix& db, OopGeometry geometry, std::size_t queue_depth, Rng& rng,
                        OopPrg prg) {
  OopState state(db, std::move(geometry), std::move(prg));
  for (unsigned i = 0; i < state.geometry().n; ++i) state.refill(i, queue_depth, rng);
  return state;
}

OopHandshake oop_offline_handshake(OopState& state, unsigned server) { return state.handshake(server); }

std::vector<BitVector> oop_query_gen(std::uint64_t theta, std::span<const OopSeed> seeds, const OopGeometry& g,
                                     const OopPrg& prg) {
  g.validate();
  if (theta >= g.rows) fail(Errc::kParameter, "target index out of range");
  if (seeds.size() != g.n) fail(Errc::kParameter, "one seed per server");
  // Residual over all n*k positions: e_theta XOR every server's mask.
  BitVector residual = BitVector::unit(g.n * g.k, theta);
  for (unsigned i = 0; i < g.n; ++i) {
    const BitVector mask = prg(seeds[i], g.mask_bits());
    const auto& chunks = g.mask_chunks[i];
    for (std::size_t c = 0; c < chunks.size(); ++c) {
      for (std::uint64_t m = 0; m < g.k; ++m) {
        if (mask.get(c * g.k + m)) {
          const std::size_t pos = chunks[c] * g.k + m;
          residual.set(pos, !residual.get(pos));
        }
      }
    }
  }
  std::vector<BitVector> out;
  out.reserve(g.n);
  for (unsigned i = 0; i < g.n; ++i) {
    BitVector q(g.k);
    for (std::uint64_t m = 0; m < g.k; ++m) q.set(m, residual.get(i * g.k + m));
    out.push_back(std::move(q));
  }
  return out;
}

Bytes oop_respond(OopState& state, unsigned server, std::uint64_t session, const BitVector& q) {
  return state.respond(server, session, q);
}

Bytes oop_reconstruct(std::span<const std::optional<Bytes>> responses) {
  if (responses.empty()) fail(Errc::kIncomplete, "no responses");
  Bytes out;
  for (std::size_t i = 0; i < responses.size(); ++i) {
    if (!responses[i]) fail(Errc::kIncomplete, "missing response from server " + std::to_string(i));
    if (i == 0) {
      out = *responses[i];
    } else {
      xor_into(out, *responses[i]);
    }
  }
  return out;
}

}  // namespace qpadl::pir
