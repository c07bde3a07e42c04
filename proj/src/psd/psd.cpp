#include "qpadl/psd/psd.hpp"

#include <string>

#include "qpadl/common/error.hpp"
#include "qpadl/pir/ens.hpp"

namespace qpadl::psd {

std::string_view reject_name(Reject r) noexcept {
  switch (r) {
    case Reject::kBadProof:
      return "bad-proof";
    case Reject::kRateLimited:
      return "rate-limited";
    case Reject::kProtocol:
      return "protocol";
  }
  return "unknown";
}

bool PolLog::admit(const Digest& event_id, const Digest& tag) {
  std::lock_guard lock(mu_);
  return seen_.emplace(event_id, tag).second;
}

bool PolLog::contains(const Digest& event_id, const Digest& tag) const {
  std::lock_guard lock(mu_);
  return seen_.contains({event_id, tag});
}

void PolLog::rotate(std::uint64_t window) {
  std::lock_guard lock(mu_);
  if (window <= window_) return;
  seen_.clear();
  window_ = window;
}

std::size_t PolLog::size() const {
  std::lock_guard lock(mu_);
  return seen_.size();
}

std::uint64_t PolLog::window() const {
  std::lock_guard lock(mu_);
  return window_;
}

Bytes SpectrumQuery::encode() const {
  ByteWriter w;
  w.u64(request_id);
  w.blob(query.encode());
  w.blob(pol.encode());
  return std::move(w).take();
}

SpectrumQuery SpectrumQuery::decode(ByteSpan data) {
  ByteReader r(data);
  SpectrumQuery q;
  q.request_id = r.u64();
  q.query = pir::PirMessage::decode(r.blob());
  q.pol = pol::ProofOfLocation::decode(r.blob());
  r.expect_end();
  return q;
}

Bytes SpectrumReply::encode() const {
  ByteWriter w;
  w.u64(request_id);
  w.u8(rejection ? static_cast<std::uint8_t>(*rejection) : 0);
  if (!rejection) w.raw(response.encode());
  return std::move(w).take();
}

SpectrumReply SpectrumReply::decode(ByteSpan data) {
  ByteReader r(data);
  SpectrumReply out;
  out.request_id = r.u64();
  const auto status = r.u8();
  if (status == 0) {
    out.response = pir::PirMessage::decode(r.raw(r.remaining()));
    return out;
  }
  if (status > static_cast<std::uint8_t>(Reject::kProtocol)) fail(Errc::kFormat, "unknown reject code");
  out.rejection = static_cast<Reject>(status);
  r.expect_end();
  return out;
}

namespace {

std::uint64_t block_window(const db::DbMatrix& db) {
  if (db.rows() == 0 || db.pow == PowKind::kNone) return 0;
  return db::DbEntryBlock::decode(db.row_bytes(0)).validity_window;
}

}  // namespace

PsdNode::PsdNode(PsdConfig config, db::DbMatrix db, db::PuzzleIssuer issuer,
                 std::shared_ptr<const pol::RingContext> ring, std::shared_ptr<const pol::SokBackend> sok,
                 std::shared_ptr<const kernels::Kernel> kernel, std::shared_ptr<PolLog> log)
    : config_(std::move(config)),
      db_(std::move(db)),
      issuer_(std::move(issuer)),
      ring_(std::move(ring)),
      sok_(std::move(sok)),
      kernel_(std::move(kernel)),
      log_(log ? std::move(log) : std::make_shared<PolLog>()) {
  if (config_.scheme == PirScheme::kNone) fail(Errc::kParameter, "PSD needs a PIR scheme");
  if (!ring_ || !sok_ || !kernel_ || !issuer_.scheme) fail(Errc::kParameter, "PSD dependencies missing");
  if (config_.beacon_seconds == 0 || config_.puzzle_window_seconds == 0) {
    fail(Errc::kParameter, "window lengths must be positive");
  }
  if (config_.scheme == PirScheme::kOop) {
    if (!config_.oop_geometry) fail(Errc::kParameter, "OOP needs a geometry");
    config_.oop_geometry->validate();
    if (config_.oop_geometry->rows != db_.rows()) fail(Errc::kGeometry, "OOP geometry does not match the database");
    if (config_.index >= config_.oop_geometry->n) fail(Errc::kParameter, "PSD index outside the OOP geometry");
    SeededRng rng(config_.bind_seed, "oop/" + std::to_string(config_.index));
    rebuild_oop(rng);
  }
  puzzle_window_ = block_window(db_);
}

std::optional<Reject> PsdNode::admit(const SpectrumQuery& request) {
  const auto& proof = request.pol;
  ++stats_.pol_verifications;
  // A proof from another beacon window would dodge the rotated log.
  if (proof.window != beacon_window_ || !pol::pol_verify(proof, *ring_, *sok_)) {
    ++stats_.bad_proof;
    return Reject::kBadProof;
  }
  if (!log_->admit(proof.signature.event_id, proof.signature.tag)) {
    ++stats_.rate_limited;
    return Reject::kRateLimited;
  }
  return std::nullopt;
}

SpectrumReply PsdNode::handle_spectrum_query(const SpectrumQuery& request) {
  return handle_batch(std::span(&request, 1)).front();
}

std::vector<SpectrumReply> PsdNode::handle_batch(std::span<const SpectrumQuery> requests) {
  std::vector<SpectrumReply> replies(requests.size());
  std::vector<std::size_t> ens_slots, ftr_slots;
  std::vector<pir::BitVector> ens_shares;
  std::vector<std::vector<std::uint32_t>> ftr_queries;

  auto protocol_error = [&](std::size_t i) {
    replies[i].rejection = Reject::kProtocol;
    ++stats_.protocol;
  };

  for (std::size_t i = 0; i < requests.size(); ++i) {
    const auto& req = requests[i];
    replies[i].request_id = req.request_id;
    if (auto reject = admit(req)) {
      replies[i].rejection = reject;
      continue;
    }
    if (req.query.scheme != config_.scheme || req.query.server != config_.index) {
      protocol_error(i);
      continue;
    }
    try {
      switch (config_.scheme) {
        case PirScheme::kEns:
          ens_shares.push_back(pir::decode_bits(req.query.payload, db_.rows()));
          ens_slots.push_back(i);
          break;
        case PirScheme::kFtr: {
          auto values = pir::decode_field_elements(req.query.payload);
          if (values.size() != db_.rows()) fail(Errc::kGeometry, "FTR query length");
          for (auto v : values) {
            if (v >= config_.ftr_modulus) fail(Errc::kFormat, "FTR query element outside the field");
          }
          ftr_queries.push_back(std::move(values));
          ftr_slots.push_back(i);
          break;
        }
        case PirScheme::kOop: {
          auto [session, q] = pir::decode_oop_query(req.query.payload, config_.oop_geometry->k);
          auto block = pir::oop_respond(*oop_, config_.index, session, q);
          replies[i].response = {PirScheme::kOop, static_cast<std::uint8_t>(config_.index),
                                 pir::encode_oop_response(session, block)};
          ++stats_.accepted;
          break;
        }
        case PirScheme::kNone:
          fail(Errc::kProtocol, "no scheme");
      }
    } catch (const Error&) {
      protocol_error(i);
    }
  }

  const auto server = static_cast<std::uint8_t>(config_.index);
  if (!ens_shares.empty()) {
    auto blocks = pir::ens_respond_batch(ens_shares, db_, *kernel_);
    for (std::size_t j = 0; j < blocks.size(); ++j) {
      replies[ens_slots[j]].response = {PirScheme::kEns, server, std::move(blocks[j])};
      ++stats_.accepted;
    }
  }
  if (!ftr_queries.empty()) {
    auto answers = pir::ftr_respond_batch(ftr_queries, db_, config_.ftr_modulus, *kernel_);
    for (std::size_t j = 0; j < answers.size(); ++j) {
      replies[ftr_slots[j]].response = {PirScheme::kFtr, server, pir::encode_field_elements(answers[j])};
      ++stats_.accepted;
    }
  }
  return replies;
}

Bytes PsdNode::handle_frame(ByteSpan frame) {
  SpectrumQuery request;
  try {
    request = SpectrumQuery::decode(frame);
  } catch (const Error&) {
    ++stats_.protocol;
    SpectrumReply reply;
    reply.rejection = Reject::kProtocol;
    return reply.encode();
  }
  return handle_spectrum_query(request).encode();
}

void PsdNode::refresh_puzzles(std::uint64_t now_seconds) {
  const auto beacon = now_seconds / config_.beacon_seconds;
  if (beacon != beacon_window_) {
    beacon_window_ = beacon;
    log_->rotate(beacon);
  }
  if (config_.pow == PowKind::kNone || config_.difficulties.empty()) return;
  const auto window = db::validity_window_at(now_seconds, config_.puzzle_window_seconds);
  if (db_.pow == config_.pow && window <= puzzle_window_) return;
  db::BindOptions options = config_.bind;
  options.validity_window = window;
  SeededRng rng(config_.bind_seed, "bind/" + std::to_string(window));
  auto rebound = db::puzzle_bind(db_, issuer_, config_.pow, config_.difficulties, options, rng);
  rebound.scheme = db_.scheme;
  db_ = std::move(rebound);
  puzzle_window_ = window;
  ++stats_.rebinds;
  if (oop_) {
    SeededRng oop_rng(config_.bind_seed, "oop/" + std::to_string(config_.index) + "/" + std::to_string(window));
    rebuild_oop(oop_rng);
  }
}

Bytes PsdNode::sign_puzzle(std::uint64_t theta, std::span<const db::BoundPuzzle> puzzles,
                           std::uint64_t validity_window, Rng& rng) const {
  return issuer_.sign(theta, puzzles, validity_window, rng);
}

void PsdNode::rebuild_oop(Rng& rng) {
  oop_ = std::make_unique<pir::OopState>(db_, *config_.oop_geometry, pir::oop_prg_shake);
  oop_->refill(config_.index, config_.oop_queue_depth, rng);
}

pir::OopHandshake PsdNode::oop_handshake() {
  if (!oop_) fail(Errc::kProtocol, "not an OOP replica");
  return pir::oop_offline_handshake(*oop_, config_.index);
}

void PsdNode::oop_refill(std::size_t count, Rng& rng) {
  if (!oop_) fail(Errc::kProtocol, "not an OOP replica");
  oop_->refill(config_.index, count, rng);
}

}  // namespace qpadl::psd
