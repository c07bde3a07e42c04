#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "qpadl/common/bytes.hpp"
#include "qpadl/common/rng.hpp"
#include "qpadl/crypto/signature.hpp"
#include "qpadl/pol/commitment.hpp"

namespace qpadl::pol {

struct LrsKeyPair {
  Digest secret{};
  Digest public_key{};  // H'("pk", sk)
};

LrsKeyPair lrs_keygen(Rng& rng);
Digest lrs_public_key(const Digest& secret);
// e_ID = H'(sk, beta, TS): fixed per access point and window.
Digest derive_event_id(const Digest& secret, const BeaconNonce& beacon, std::uint64_t window);
// T = H'(sk, e_ID)
Digest lrs_tag(const Digest& secret, const Digest& event_id);

// Static ring of 2^k public keys with its Merkle tree built once.
class RingContext {
 public:
  explicit RingContext(std::vector<Digest> members);

  std::size_t size() const { return members_.size(); }
  unsigned depth() const { return depth_; }
  const Digest& root() const { return nodes_[1]; }
  const std::vector<Digest>& members() const { return members_; }
  std::optional<std::size_t> index_of(const Digest& public_key) const;
  // Sibling hashes from the leaf up.
  std::vector<Digest> path(std::size_t index) const;

 private:
  std::vector<Digest> members_;
  unsigned depth_ = 0;
  std::vector<Digest> nodes_;  // heap order, leaves at [size, 2*size)
};

Digest merkle_leaf(const Digest& public_key);
Digest merkle_node(const Digest& left, const Digest& right);
bool merkle_verify(const Digest& public_key, std::size_t index, std::span<const Digest> path, const Digest& root);

// Public part of the signed relation: some ring member (under root) holds sk
// with T = H'(sk, e_ID), and signed the message.
struct LrsStatement {
  Digest event_id{};
  Digest root{};
  Digest tag{};
  Bytes message;

  Bytes encode() const;
};

struct LrsWitness {
  Digest secret{};
  std::size_t index = 0;
  std::vector<Digest> path;
};

// Signature-of-knowledge backend for the relation above.
class SokBackend {
 public:
  virtual ~SokBackend() = default;
  virtual std::string_view name() const = 0;
  // Throws kMembership if the witness does not satisfy the statement.
  virtual Bytes prove(const LrsStatement& statement, const LrsWitness& witness, Rng& rng) const = 0;
  virtual bool verify(const LrsStatement& statement, ByteSpan proof) const = 0;
};

// Trusted checker standing in for a zero-knowledge prover: it checks the
// witness itself and signs the statement. The proof carries no public key.
class IdealAttestor final : public SokBackend {
 public:
  IdealAttestor(std::shared_ptr<const crypto::SignatureScheme> scheme, Rng& rng);

  std::string_view name() const override { return "ideal-attestor"; }
  Bytes prove(const LrsStatement& statement, const LrsWitness& witness, Rng& rng) const override;
  bool verify(const LrsStatement& statement, ByteSpan proof) const override;
  const Bytes& verification_key() const { return keys_.public_key; }

 private:
  std::shared_ptr<const crypto::SignatureScheme> scheme_;
  crypto::SigningKeyPair keys_;
};

struct LrsSignature {
  Digest event_id{};
  Digest tag{};
  Digest root{};
  Bytes proof;
};

// Throws kMembership if the signer's key is not in the ring.
LrsSignature lrs_sign(const Digest& event_id, const Digest& secret, ByteSpan message, const RingContext& ring,
                      const SokBackend& backend, Rng& rng);
bool lrs_verify(const Digest& event_id, const LrsSignature& sig, ByteSpan message, const RingContext& ring,
                const SokBackend& backend);
// Same event and same tag.
bool lrs_link(const Digest& event_id, const LrsSignature& a, const LrsSignature& b);

}  // namespace qpadl::pol
