#include "qpadl/crypto/kem.hpp"

#include <algorithm>

#include "qpadl/common/error.hpp"
#include "qpadl/crypto/hash.hpp"
#include "random_source.hpp"

extern "C" {
int PQCLEAN_MLKEM768_CLEAN_crypto_kem_keypair(std::uint8_t* pk, std::uint8_t* sk);
int PQCLEAN_MLKEM768_CLEAN_crypto_kem_enc(std::uint8_t* ct, std::uint8_t* ss, const std::uint8_t* pk);
int PQCLEAN_MLKEM768_CLEAN_crypto_kem_dec(std::uint8_t* ss, const std::uint8_t* ct,
                                          const std::uint8_t* sk);
}

namespace qpadl::crypto {

KemKeyPair MlKem768::keygen(Rng& rng) const {
  detail::ScopedRandomSource source(rng);
  KemKeyPair kp{Bytes(kPublicKeyBytes), Bytes(kSecretKeyBytes)};
  if (PQCLEAN_MLKEM768_CLEAN_crypto_kem_keypair(kp.public_key.data(), kp.secret_key.data()) != 0) {
    fail(Errc::kInput, "ML-KEM-768 keygen failed");
  }
  return kp;
}

Encapsulation MlKem768::encapsulate(ByteSpan public_key, Rng& rng) const {
  if (public_key.size() != kPublicKeyBytes) fail(Errc::kParameter, "ML-KEM-768 public key size");
  detail::ScopedRandomSource source(rng);
  Encapsulation e{Bytes(kCiphertextBytes), {}};
  if (PQCLEAN_MLKEM768_CLEAN_crypto_kem_enc(e.ciphertext.data(), e.shared_secret.data(),
                                            public_key.data()) != 0) {
    fail(Errc::kInput, "ML-KEM-768 encapsulation failed");
  }
  return e;
}

Digest MlKem768::decapsulate(ByteSpan secret_key, ByteSpan ciphertext) const {
  if (secret_key.size() != kSecretKeyBytes || ciphertext.size() != kCiphertextBytes) {
    fail(Errc::kParameter, "ML-KEM-768 key or ciphertext size");
  }
  Digest ss{};
  PQCLEAN_MLKEM768_CLEAN_crypto_kem_dec(ss.data(), ciphertext.data(), secret_key.data());
  return ss;
}

KemKeyPair StubKem::keygen(Rng& rng) const {
  Bytes sk = rng.bytes(32);
  return {sk, sk};
}

Encapsulation StubKem::encapsulate(ByteSpan public_key, Rng& rng) const {
  Bytes coins = rng.bytes(32);
  return {coins, tagged_hash("stub-kem", {public_key, coins})};
}

Digest StubKem::decapsulate(ByteSpan secret_key, ByteSpan ciphertext) const {
  if (ciphertext.size() != 32) fail(Errc::kParameter, "stub KEM ciphertext size");
  return tagged_hash("stub-kem", {secret_key, ciphertext});
}

std::shared_ptr<const Kem> make_kem(KemBackend backend) {
  switch (backend) {
    case KemBackend::kMlKem768: return std::make_shared<MlKem768>();
    case KemBackend::kStub: return std::make_shared<StubKem>();
  }
  fail(Errc::kParameter, "unknown KEM backend");
}

}  // namespace qpadl::crypto
