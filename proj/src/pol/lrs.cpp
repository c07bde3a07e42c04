#include "qpadl/pol/lrs.hpp"

#include <bit>

#include "qpadl/common/error.hpp"
#include "qpadl/crypto/hash.hpp"

namespace qpadl::pol {

LrsKeyPair lrs_keygen(Rng& rng) {
  LrsKeyPair k;
  k.secret = rng.array<32>();
  k.public_key = lrs_public_key(k.secret);
  return k;
}

Digest lrs_public_key(const Digest& secret) { return crypto::tagged_hash("lrs-pk", {secret}); }

Digest derive_event_id(const Digest& secret, const BeaconNonce& beacon, std::uint64_t window) {
  ByteWriter ts;
  ts.u64(window);
  return crypto::tagged_hash("lrs-event", {secret, beacon, ts.bytes()});
}

Digest lrs_tag(const Digest& secret, const Digest& event_id) {
  return crypto::tagged_hash("lrs-tag", {secret, event_id});
}

Digest merkle_leaf(const Digest& public_key) { return crypto::tagged_hash("ring-leaf", {public_key}); }

Digest merkle_node(const Digest& left, const Digest& right) {
  return crypto::tagged_hash("ring-node", {left, right});
}

RingContext::RingContext(std::vector<Digest> members) : members_(std::move(members)) {
  const std::size_t n = members_.size();
  if (n < 2 || !std::has_single_bit(n)) fail(Errc::kParameter, "ring size must be a power of two, at least 2");
  depth_ = static_cast<unsigned>(std::countr_zero(n));
  nodes_.resize(2 * n);
  for (std::size_t i = 0; i < n; ++i) nodes_[n + i] = merkle_leaf(members_[i]);
  for (std::size_t i = n; i-- > 1;) nodes_[i] = merkle_node(nodes_[2 * i], nodes_[2 * i + 1]);
}

std::optional<std::size_t> RingContext::index_of(const Digest& public_key) const {
  for (std::size_t i = 0; i < members_.size(); ++i) {
    if (members_[i] == public_key) return i;
  }
  return std::nullopt;
}

std::vector<Digest> RingContext::path(std::size_t index) const {
  if (index >= members_.size()) fail(Errc::kMembership, "ring index out of range");
  std::vector<Digest> out;
  for (std::size_t node = members_.size() + index; node > 1; node /= 2) out.push_back(nodes_[node ^ 1]);
  return out;
}

bool merkle_verify(const Digest& public_key, std::size_t index, std::span<const Digest> path, const Digest& root) {
  if (path.size() >= 64 || index >= (std::size_t{1} << path.size())) return false;
  Digest h = merkle_leaf(public_key);
  for (const auto& sibling : path) {
    h = (index & 1) ? merkle_node(sibling, h) : merkle_node(h, sibling);
    index >>= 1;
  }
  return h == root;
}

Bytes LrsStatement::encode() const {
  ByteWriter w(13 + 3 * 32 + 4 + message.size());
  w.raw(as_bytes("lrs-statement"));
  w.raw(event_id);
  w.raw(root);
  w.raw(tag);
  w.blob(message);
  return std::move(w).take();
}

IdealAttestor::IdealAttestor(std::shared_ptr<const crypto::SignatureScheme> scheme, Rng& rng)
    : scheme_(std::move(scheme)) {
  if (!scheme_) fail(Errc::kParameter, "missing signature scheme");
  keys_ = scheme_->keygen(rng);
}

Bytes IdealAttestor::prove(const LrsStatement& s, const LrsWitness& w, Rng& rng) const {
  const Digest pk = lrs_public_key(w.secret);
  if (!merkle_verify(pk, w.index, w.path, s.root)) fail(Errc::kMembership, "witness key is not under the ring root");
  if (lrs_tag(w.secret, s.event_id) != s.tag) fail(Errc::kMembership, "tag does not match the witness");
  return scheme_->sign(keys_.secret_key, s.encode(), rng);
}

bool IdealAttestor::verify(const LrsStatement& s, ByteSpan proof) const {
  return scheme_->verify(keys_.public_key, s.encode(), proof);
}

LrsSignature lrs_sign(const Digest& event_id, const Digest& secret, ByteSpan message, const RingContext& ring,
                      const SokBackend& backend, Rng& rng) {
  const auto index = ring.index_of(lrs_public_key(secret));
  if (!index) fail(Errc::kMembership, "signer is not a ring member");
  LrsSignature sig;
  sig.event_id = event_id;
  sig.tag = lrs_tag(secret, event_id);
  sig.root = ring.root();
  const LrsStatement statement{event_id, sig.root, sig.tag, Bytes(message.begin(), message.end())};
  sig.proof = backend.prove(statement, LrsWitness{secret, *index, ring.path(*index)}, rng);
  return sig;
}

bool lrs_verify(const Digest& event_id, const LrsSignature& sig, ByteSpan message, const RingContext& ring,
                const SokBackend& backend) {
  if (sig.event_id != event_id || sig.root != ring.root()) return false;
  const LrsStatement statement{event_id, sig.root, sig.tag, Bytes(message.begin(), message.end())};
  return backend.verify(statement, sig.proof);
}

bool lrs_link(const Digest& event_id, const LrsSignature& a, const LrsSignature& b) {
  return a.event_id == event_id && b.event_id == event_id && a.tag == b.tag;
}

}  // namespace qpadl::pol
