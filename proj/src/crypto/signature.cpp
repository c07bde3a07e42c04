#include "qpadl/crypto/signature.hpp"

#include <openssl/crypto.h>

#include "qpadl/common/error.hpp"
#include "qpadl/crypto/hash.hpp"
#include "random_source.hpp"

extern "C" {
int PQCLEAN_MLDSA44_CLEAN_crypto_sign_keypair(std::uint8_t* pk, std::uint8_t* sk);
int PQCLEAN_MLDSA44_CLEAN_crypto_sign_signature_ctx(std::uint8_t* sig, std::size_t* siglen,
                                                    const std::uint8_t* m, std::size_t mlen,
                                                    const std::uint8_t* ctx, std::size_t ctxlen,
                                                    const std::uint8_t* sk);
int PQCLEAN_MLDSA44_CLEAN_crypto_sign_verify_ctx(const std::uint8_t* sig, std::size_t siglen,
                                                 const std::uint8_t* m, std::size_t mlen,
                                                 const std::uint8_t* ctx, std::size_t ctxlen,
                                                 const std::uint8_t* pk);
}

namespace qpadl::crypto {

SigningKeyPair MlDsa44::keygen(Rng& rng) const {
  detail::ScopedRandomSource source(rng);
  SigningKeyPair kp{Bytes(kPublicKeyBytes), Bytes(kSecretKeyBytes)};
  if (PQCLEAN_MLDSA44_CLEAN_crypto_sign_keypair(kp.public_key.data(), kp.secret_key.data()) != 0) {
    fail(Errc::kInput, "ML-DSA-44 keygen failed");
  }
  return kp;
}

Bytes MlDsa44::sign(ByteSpan secret_key, ByteSpan message, Rng& rng) const {
  if (secret_key.size() != kSecretKeyBytes) fail(Errc::kParameter, "ML-DSA-44 secret key size");
  detail::ScopedRandomSource source(rng);
  Bytes sig(kSignatureBytes);
  std::size_t len = 0;
  if (PQCLEAN_MLDSA44_CLEAN_crypto_sign_signature_ctx(sig.data(), &len, message.data(),
                                                      message.size(), nullptr, 0,
                                                      secret_key.data()) != 0 ||
      len != kSignatureBytes) {
    fail(Errc::kInput, "ML-DSA-44 signing failed");
  }
  return sig;
}

bool MlDsa44::verify(ByteSpan public_key, ByteSpan message, ByteSpan signature) const {
  if (public_key.size() != kPublicKeyBytes || signature.size() != kSignatureBytes) return false;
  return PQCLEAN_MLDSA44_CLEAN_crypto_sign_verify_ctx(signature.data(), signature.size(),
                                                      message.data(), message.size(), nullptr,
                                                      0, public_key.data()) == 0;
}

SigningKeyPair StubSignature::keygen(Rng& rng) const {
  Bytes sk = rng.bytes(32);
  return {sk, sk};
}

Bytes StubSignature::sign(ByteSpan secret_key, ByteSpan message, Rng&) const {
  auto d = tagged_hash("stub-sig", {secret_key, message});
  return {d.begin(), d.end()};
}

bool StubSignature::verify(ByteSpan public_key, ByteSpan message, ByteSpan signature) const {
  if (signature.size() != 32) return false;
  auto d = tagged_hash("stub-sig", {public_key, message});
  return CRYPTO_memcmp(d.data(), signature.data(), 32) == 0;
}

std::shared_ptr<const SignatureScheme> make_signature_scheme(SignatureBackend backend) {
  switch (backend) {
    case SignatureBackend::kMlDsa44: return std::make_shared<MlDsa44>();
    case SignatureBackend::kStub: return std::make_shared<StubSignature>();
  }
  fail(Errc::kParameter, "unknown signature backend");
}

}  // namespace qpadl::crypto
