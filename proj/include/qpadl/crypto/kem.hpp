#pragma once

#include <memory>
#include <string_view>

#include "qpadl/common/bytes.hpp"
#include "qpadl/common/rng.hpp"

namespace qpadl::crypto {

struct KemKeyPair {
  Bytes public_key;
  Bytes secret_key;
};

struct Encapsulation {
  Bytes ciphertext;
  Digest shared_secret;
};

// Key-encapsulation backend: ML-KEM-768 in production, a transparent stub in
// tests. decapsulate returns nullopt only when the backend can detect a
// malformed ciphertext; ML-KEM rejects implicitly with a pseudorandom key.
class Kem {
 public:
  virtual ~Kem() = default;

  virtual std::string_view name() const = 0;
  virtual KemKeyPair keygen(Rng& rng) const = 0;
  virtual Encapsulation encapsulate(ByteSpan public_key, Rng& rng) const = 0;
  virtual Digest decapsulate(ByteSpan secret_key, ByteSpan ciphertext) const = 0;
};

class MlKem768 final : public Kem {
 public:
  static constexpr std::size_t kPublicKeyBytes = 1184;
  static constexpr std::size_t kSecretKeyBytes = 2400;
  static constexpr std::size_t kCiphertextBytes = 1088;

  std::string_view name() const override { return "ML-KEM-768"; }
  KemKeyPair keygen(Rng& rng) const override;
  Encapsulation encapsulate(ByteSpan public_key, Rng& rng) const override;
  Digest decapsulate(ByteSpan secret_key, ByteSpan ciphertext) const override;
};

// Insecure: public key equals secret key, ciphertext is the raw coins and the
// shared secret is H(pk || coins). Lets tests replay encapsulations exactly.
class StubKem final : public Kem {
 public:
  std::string_view name() const override { return "stub-kem"; }
  KemKeyPair keygen(Rng& rng) const override;
  Encapsulation encapsulate(ByteSpan public_key, Rng& rng) const override;
  Digest decapsulate(ByteSpan secret_key, ByteSpan ciphertext) const override;
};

enum class KemBackend { kMlKem768, kStub };

std::shared_ptr<const Kem> make_kem(KemBackend backend);

}  // namespace qpadl::crypto
