#include "qpadl/crypto/hash.hpp"

#include <openssl/evp.h>

#include <bit>

#include "qpadl/common/error.hpp"

namespace qpadl::crypto {

struct Sha256::Impl {
  EVP_MD_CTX* ctx = nullptr;
  ~Impl() { EVP_MD_CTX_free(ctx); }
};

Sha256::Sha256() : impl_(std::make_unique<Impl>()) {
  impl_->ctx = EVP_MD_CTX_new();
  if (impl_->ctx == nullptr || EVP_DigestInit_ex(impl_->ctx, EVP_sha256(), nullptr) != 1) {
    fail(Errc::kInput, "SHA-256 unavailable");
  }
}

Sha256::~Sha256() = default;
Sha256::Sha256(Sha256&&) noexcept = default;
Sha256& Sha256::operator=(Sha256&&) noexcept = default;

Sha256& Sha256::update(ByteSpan data) {
  if (!data.empty()) EVP_DigestUpdate(impl_->ctx, data.data(), data.size());
  return *this;
}

Sha256& Sha256::update_u32(std::uint32_t v) {
  std::uint8_t b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<std::uint8_t>(v >> (8 * i));
  return update(ByteSpan(b, 4));
}

Sha256& Sha256::update_u64(std::uint64_t v) {
  std::uint8_t b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<std::uint8_t>(v >> (8 * i));
  return update(ByteSpan(b, 8));
}

Digest Sha256::finish() {
  Digest out{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(impl_->ctx, out.data(), &len);
  EVP_DigestInit_ex(impl_->ctx, EVP_sha256(), nullptr);
  return out;
}

Digest sha256(ByteSpan data) {
  Digest out{};
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(), nullptr);
  return out;
}

Digest sha256(std::initializer_list<ByteSpan> parts) {
  Sha256 h;
  for (auto p : parts) h.update(p);
  return h.finish();
}

Digest tagged_hash(std::string_view label, std::initializer_list<ByteSpan> parts) {
  Sha256 h;
  h.update_u32(static_cast<std::uint32_t>(label.size()));
  h.update(label);
  for (auto p : parts) {
    h.update_u32(static_cast<std::uint32_t>(p.size()));
    h.update(p);
  }
  return h.finish();
}

Bytes shake256(ByteSpan input, std::size_t out_len) {
  Bytes out(out_len);
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (ctx == nullptr || EVP_DigestInit_ex(ctx, EVP_shake256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx, input.data(), input.size()) != 1 ||
      (out_len > 0 && EVP_DigestFinalXOF(ctx, out.data(), out_len) != 1)) {
    EVP_MD_CTX_free(ctx);
    fail(Errc::kInput, "SHAKE256 unavailable");
  }
  EVP_MD_CTX_free(ctx);
  return out;
}

int leading_zero_bits(const Digest& d) {
  int n = 0;
  for (auto b : d) {
    if (b == 0) {
      n += 8;
      continue;
    }
    return n + std::countl_zero(b);
  }
  return n;
}

}  // namespace qpadl::crypto
