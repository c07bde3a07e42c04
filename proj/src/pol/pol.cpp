#include "qpadl/pol/pol.hpp"

#include "qpadl/common/error.hpp"

namespace qpadl::pol {

Bytes pol_message(const Digest& commitment, std::uint64_t window) {
  ByteWriter w(40);
  w.raw(commitment);
  w.u64(window);
  return std::move(w).take();
}

Bytes ProofOfLocation::encode() const {
  ByteWriter w(4 * 32 + 4 + signature.proof.size() + 8);
  w.raw(commitment);
  w.raw(signature.event_id);
  w.raw(signature.tag);
  w.raw(signature.root);
  w.blob(signature.proof);
  w.u64(window);
  return std::move(w).take();
}

ProofOfLocation ProofOfLocation::decode(ByteSpan data) {
  ByteReader r(data);
  ProofOfLocation p;
  p.commitment = r.array<32>();
  p.signature.event_id = r.array<32>();
  p.signature.tag = r.array<32>();
  p.signature.root = r.array<32>();
  p.signature.proof = r.blob();
  p.window = r.u64();
  r.expect_end();
  return p;
}

bool ProofOfLocation::operator==(const ProofOfLocation& o) const {
  return commitment == o.commitment && window == o.window && signature.event_id == o.signature.event_id &&
         signature.tag == o.signature.tag && signature.root == o.signature.root &&
         signature.proof == o.signature.proof;
}

AccessPoint::AccessPoint(AccessPointConfig config, LrsKeyPair keys, std::shared_ptr<const RingContext> ring,
                         std::shared_ptr<const SokBackend> backend)
    : config_(config), keys_(keys), ring_(std::move(ring)), backend_(std::move(backend)) {
  if (!ring_ || !backend_) fail(Errc::kParameter, "access point needs a ring and a proof backend");
  if (!ring_->index_of(keys_.public_key)) fail(Errc::kMembership, "access point key is not in the ring");
}

const Beacon& AccessPoint::advance(std::uint64_t window, Rng& rng) {
  if (latest_ && window <= latest_->window) fail(Errc::kOrdering, "beacon windows must increase");
  latest_ = Beacon{config_.id, window, rng.array<8>()};
  return *latest_;
}

PolOutcome AccessPoint::respond(const PolRequest& request, Rng& rng) {
  PolOutcome out;
  if (!latest_ || request.beacon != *latest_) {
    out.status = PolStatus::kStaleBeacon;
    return out;
  }
  ++proximity_checks_;
  out.distance_m = prox_verif(request.rss_dbm, request.rtt_s, config_.env);
  if (out.distance_m > config_.threshold_m) {
    out.status = PolStatus::kTooFar;
    return out;
  }
  const Digest event_id = derive_event_id(keys_.secret, latest_->nonce, latest_->window);
  ProofOfLocation proof;
  proof.commitment = request.commitment;
  proof.window = latest_->window;
  proof.signature = lrs_sign(event_id, keys_.secret, pol_message(proof.commitment, proof.window), *ring_,
                             *backend_, rng);
  out.status = PolStatus::kAccepted;
  out.proof = std::move(proof);
  return out;
}

PolClientState pol_request(const Location& location, const Beacon& beacon, double rss_dbm, double rtt_s, Rng& rng) {
  PolClientState s;
  s.commitment = commit_location(location, beacon, rng);
  s.request = PolRequest{beacon, s.commitment.digest, rss_dbm, rtt_s};
  return s;
}

PolOutcome pol_respond(AccessPoint& ap, const PolRequest& request, Rng& rng) { return ap.respond(request, rng); }

bool pol_verify(const ProofOfLocation& proof, const RingContext& ring, const SokBackend& backend) {
  return lrs_verify(proof.signature.event_id, proof.signature, pol_message(proof.commitment, proof.window), ring,
                    backend);
}

}  // namespace qpadl::pol
