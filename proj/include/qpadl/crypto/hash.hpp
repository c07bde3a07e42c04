#pragma once

#include <initializer_list>
#include <memory>
#include <string_view>

#include "qpadl/common/bytes.hpp"

namespace qpadl::crypto {

// Incremental SHA-256 (OpenSSL EVP).
class Sha256 {
 public:
  Sha256();
  ~Sha256();
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;
  Sha256(Sha256&&) noexcept;
  Sha256& operator=(Sha256&&) noexcept;

  Sha256& update(ByteSpan data);
  Sha256& update(std::string_view s) { return update(as_bytes(s)); }
  Sha256& update_u32(std::uint32_t v);
  Sha256& update_u64(std::uint64_t v);
  Digest finish();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

Digest sha256(ByteSpan data);
Digest sha256(std::initializer_list<ByteSpan> parts);

// Domain-separated hash used for keys, tags and event ids. The label keeps
// the different uses of H' apart.
Digest tagged_hash(std::string_view label, std::initializer_list<ByteSpan> parts);

// SHAKE256 extendable output.
Bytes shake256(ByteSpan input, std::size_t out_len);

// Number of leading zero bits of a digest.
int leading_zero_bits(const Digest& d);

}  // namespace qpadl::crypto
