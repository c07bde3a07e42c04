#include "qpadl/sas/sas.hpp"

#include "qpadl/common/error.hpp"
#include "qpadl/crypto/hash.hpp"

namespace qpadl::sas {

const db::BoundPuzzle& Token::puzzle() const {
  if (solved >= puzzles.size()) fail(Errc::kFormat, "token names a puzzle it does not carry");
  return puzzles[solved];
}

Bytes Token::encode() const {
  ByteWriter w;
  w.u64(theta);
  w.u64(validity_window);
  w.raw(db::encode_puzzles(puzzles));
  w.u8(solved);
  if (issuer_sig.size() > 0xffff) fail(Errc::kFormat, "issuer signature too long");
  w.u16(static_cast<std::uint16_t>(issuer_sig.size()));
  w.raw(issuer_sig);
  w.blob(solution);
  return std::move(w).take();
}

Token Token::decode(ByteSpan data) {
  ByteReader r(data);
  Token t;
  t.theta = r.u64();
  t.validity_window = r.u64();
  t.puzzles = db::decode_puzzles(r);
  t.solved = r.u8();
  const auto sig_len = r.u16();
  auto sig = r.raw(sig_len);
  t.issuer_sig.assign(sig.begin(), sig.end());
  t.solution = r.blob();
  r.expect_end();
  return t;
}

Bytes token_context(std::uint64_t theta, std::uint64_t validity_window, const db::BoundPuzzle& puzzle) {
  ByteWriter w;
  w.u64(theta);
  w.u64(validity_window);
  w.u8(static_cast<std::uint8_t>(puzzle.kind));
  w.u32(puzzle.difficulty);
  const auto d = crypto::tagged_hash("token-context", {w.bytes(), puzzle.bytes});
  return Bytes(d.begin(), d.end());
}

namespace {

Bytes canonical_solution(const Token& token) {
  const auto& bound = token.puzzle();
  if (bound.kind != PowKind::kLbp) return token.solution;
  try {
    const auto puzzle = pow::LbpPuzzle::deserialize(bound.bytes);
    auto sol = pow::LbpSolution::deserialize(puzzle, token.solution);
    for (const auto& c : sol.v) {
      if (c == 0) continue;
      if (c < 0) {
        for (auto& e : sol.v) e = -e;
      }
      break;
    }
    return sol.serialize(puzzle);
  } catch (const Error&) {
    return token.solution;
  }
}

}  // namespace

Digest token_digest(const Token& token) {
  const auto& bound = token.puzzle();
  const auto solution = canonical_solution(token);
  ByteWriter pi;
  pi.u8(static_cast<std::uint8_t>(bound.kind));
  pi.u32(bound.difficulty);
  pi.blob(bound.bytes);
  return crypto::tagged_hash("token", {pi.bytes(), solution});
}

bool token_pow_verify(const Token& token) {
  const auto& bound = token.puzzle();
  try {
    switch (bound.kind) {
      case PowKind::kHct: {
        const auto puzzle = pow::HctPuzzle::deserialize(bound.bytes);
        if (puzzle.difficulty != bound.difficulty) return false;
        const auto proof = pow::HctProof::deserialize(token.solution);
        const auto context = token_context(token.theta, token.validity_window, bound);
        return pow::hct_verify_noninteractive(puzzle, proof, context).accepted;
      }
      case PowKind::kLbp: {
        const auto puzzle = pow::LbpPuzzle::deserialize(bound.bytes);
        if (puzzle.dimension != bound.difficulty) return false;
        return pow::lbp_verify(puzzle, pow::LbpSolution::deserialize(puzzle, token.solution));
      }
      case PowKind::kNone:
        break;
    }
  } catch (const Error&) {
  }
  return false;
}

Token create_token(const db::DbEntryBlock& block, std::uint64_t theta, const crypto::SignatureScheme& scheme,
                   ByteSpan psd_public_key, std::uint64_t current_window, const TokenOptions& options) {
  const auto check = db::check_puzzles(scheme, psd_public_key, theta, block.puzzles, block.validity_window,
                                       block.issuer_sig, current_window);
  if (check == db::PuzzleCheck::kBadSignature) fail(Errc::kProtocol, "puzzle signature does not verify");
  if (check == db::PuzzleCheck::kStale) fail(Errc::kProtocol, "puzzle validity window has passed");
  if (options.puzzle_index >= block.puzzles.size()) fail(Errc::kParameter, "block has no puzzle at that index");

  Token token;
  token.theta = theta;
  token.validity_window = block.validity_window;
  token.puzzles = block.puzzles;
  token.solved = static_cast<std::uint8_t>(options.puzzle_index);
  token.issuer_sig = block.issuer_sig;
  const auto& bound = token.puzzle();
  switch (bound.kind) {
    case PowKind::kHct: {
      const auto puzzle = pow::HctPuzzle::deserialize(bound.bytes);
      const auto solution = pow::hct_solve(puzzle, options.hct);
      token.solution = pow::hct_prove(puzzle, solution, token_context(theta, block.validity_window, bound)).serialize();
      break;
    }
    case PowKind::kLbp: {
      const auto puzzle = pow::LbpPuzzle::deserialize(bound.bytes);
      token.solution = pow::lbp_solve(puzzle, options.lbp).serialize(puzzle);
      break;
    }
    case PowKind::kNone:
      fail(Errc::kProtocol, "block carries no puzzle");
  }
  return token;
}

std::string_view stage_name(Stage s) noexcept {
  switch (s) {
    case Stage::kNone:
      return "none";
    case Stage::kSignature:
      return "signature";
    case Stage::kPow:
      return "pow";
    case Stage::kReplay:
      return "replay";
    case Stage::kPol:
      return "pol";
    case Stage::kOpening:
      return "opening";
    case Stage::kFormat:
      return "format";
  }
  return "unknown";
}

Bytes ServiceDecision::encode() const {
  return {static_cast<std::uint8_t>(outcome), static_cast<std::uint8_t>(stage)};
}

ServiceDecision ServiceDecision::decode(ByteSpan data) {
  ByteReader r(data);
  ServiceDecision d;
  const auto outcome = r.u8();
  const auto stage = r.u8();
  r.expect_end();
  if (outcome < 1 || outcome > 2 || stage > static_cast<std::uint8_t>(Stage::kFormat)) {
    fail(Errc::kFormat, "decision frame");
  }
  d.outcome = static_cast<Outcome>(outcome);
  d.stage = static_cast<Stage>(stage);
  return d;
}

Bytes ServiceRequest::encode() const {
  ByteWriter w;
  w.blob(token.encode());
  w.blob(pol.encode());
  w.raw(commitment);
  w.u8(opening ? 1 : 0);
  if (opening) w.raw(pol::encode_opening(*opening));
  return std::move(w).take();
}

ServiceRequest ServiceRequest::decode(ByteSpan data) {
  ByteReader r(data);
  ServiceRequest req;
  req.token = Token::decode(r.blob());
  req.pol = pol::ProofOfLocation::decode(r.blob());
  req.commitment = r.array<32>();
  const auto has_opening = r.u8();
  if (has_opening > 1) fail(Errc::kFormat, "opening flag");
  if (has_opening) req.opening = pol::decode_opening(r.raw(r.remaining()));
  r.expect_end();
  return req;
}

SasServer::SasServer(SasConfig config, std::shared_ptr<const crypto::SignatureScheme> scheme, Bytes psd_public_key,
                     std::shared_ptr<const pol::RingContext> ring, std::shared_ptr<const pol::SokBackend> sok)
    : config_(config),
      scheme_(std::move(scheme)),
      psd_public_key_(std::move(psd_public_key)),
      ring_(std::move(ring)),
      sok_(std::move(sok)) {
  if (!scheme_ || !ring_ || !sok_) fail(Errc::kParameter, "SAS dependencies missing");
  if (config_.beacon_seconds == 0 || config_.puzzle_window_seconds == 0) {
    fail(Errc::kParameter, "window lengths must be positive");
  }
}

void SasServer::advance(std::uint64_t now_seconds) {
  beacon_window_ = now_seconds / config_.beacon_seconds;
  puzzle_window_ = db::validity_window_at(now_seconds, config_.puzzle_window_seconds);
  std::lock_guard lock(replay_mu_);
  std::erase_if(replay_, [&](const auto& kv) { return kv.second < puzzle_window_; });
}

std::size_t SasServer::replay_log_size() const {
  std::lock_guard lock(replay_mu_);
  return replay_.size();
}

bool SasServer::record_token(const Digest& digest, std::uint64_t window) {
  std::lock_guard lock(replay_mu_);
  return replay_.emplace(digest, window).second;
}

ServiceDecision SasServer::decide(const ServiceRequest& request, bool& token_was_new) {
  ServiceDecision d;
  const auto& token = request.token;
  if (token.solved >= token.puzzles.size()) return d;
  d.token_digest = token_digest(token);
  auto reject = [&](Stage stage) {
    d.outcome = Outcome::kRejected;
    d.stage = stage;
    return d;
  };

  ++counters_.signature_checks;
  if (db::check_puzzles(*scheme_, psd_public_key_, token.theta, token.puzzles, token.validity_window,
                        token.issuer_sig, puzzle_window_) != db::PuzzleCheck::kOk) {
    return reject(Stage::kSignature);
  }

  ++counters_.pow_verifications;
  if (token.puzzle().difficulty < config_.min_difficulty || !token_pow_verify(token)) return reject(Stage::kPow);

  if (!record_token(d.token_digest, token.validity_window)) return reject(Stage::kReplay);
  token_was_new = true;

  ++counters_.pol_verifications;
  if (request.pol.window != beacon_window_ || request.pol.commitment != request.commitment ||
      !pol::pol_verify(request.pol, *ring_, *sok_)) {
    return reject(Stage::kPol);
  }

  if (request.opening) {
    if (request.opening->window != request.pol.window || !pol::verify_opening(request.commitment, *request.opening)) {
      return reject(Stage::kOpening);
    }
  } else if (config_.require_opening) {
    return reject(Stage::kOpening);
  }

  d.outcome = Outcome::kGranted;
  d.stage = Stage::kNone;
  return d;
}

ServiceDecision SasServer::handle_service_request(const ServiceRequest& request) {
  bool token_was_new = false;
  auto d = decide(request, token_was_new);
  decisions_.push_back({d, token_was_new});
  return d;
}

Bytes SasServer::handle_frame(ByteSpan frame) {
  ServiceRequest request;
  try {
    request = ServiceRequest::decode(frame);
  } catch (const Error&) {
    ServiceDecision d;
    decisions_.push_back({d, false});
    return d.encode();
  }
  return handle_service_request(request).encode();
}

}  // namespace qpadl::sas
