#pragma once

#include <memory>
#include <string_view>

#include "qpadl/common/bytes.hpp"
#include "qpadl/common/rng.hpp"

namespace qpadl::crypto {

struct SigningKeyPair {
  Bytes public_key;
  Bytes secret_key;
};

// Post-quantum signature backend. The production binding is ML-DSA-44; the
// stub is a keyed-hash construction for fast deterministic tests.
class SignatureScheme {
 public:
  virtual ~SignatureScheme() = default;

  virtual std::string_view name() const = 0;
  virtual std::size_t signature_size() const = 0;
  virtual SigningKeyPair keygen(Rng& rng) const = 0;
  virtual Bytes sign(ByteSpan secret_key, ByteSpan message, Rng& rng) const = 0;
  virtual bool verify(ByteSpan public_key, ByteSpan message, ByteSpan signature) const = 0;
};

class MlDsa44 final : public SignatureScheme {
 public:
  static constexpr std::size_t kPublicKeyBytes = 1312;
  static constexpr std::size_t kSecretKeyBytes = 2560;
  static constexpr std::size_t kSignatureBytes = 2420;

  std::string_view name() const override { return "ML-DSA-44"; }
  std::size_t signature_size() const override { return kSignatureBytes; }
  SigningKeyPair keygen(Rng& rng) const override;
  Bytes sign(ByteSpan secret_key, ByteSpan message, Rng& rng) const override;
  bool verify(ByteSpan public_key, ByteSpan message, ByteSpan signature) const override;
};

// Insecure: the public key equals the secret key. Test and benchmark use only.
class StubSignature final : public SignatureScheme {
 public:
  std::string_view name() const override { return "stub-sig"; }
  std::size_t signature_size() const override { return 32; }
  SigningKeyPair keygen(Rng& rng) const override;
  Bytes sign(ByteSpan secret_key, ByteSpan message, Rng& rng) const override;
  bool verify(ByteSpan public_key, ByteSpan message, ByteSpan signature) const override;
};

enum class SignatureBackend { kMlDsa44, kStub };

std::shared_ptr<const SignatureScheme> make_signature_scheme(SignatureBackend backend);

}  // namespace qpadl::crypto
