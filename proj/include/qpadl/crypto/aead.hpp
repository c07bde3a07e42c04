#pragma once

#include <array>
#include <optional>

#include "qpadl/common/bytes.hpp"

namespace qpadl::crypto {

using AeadKey = std::array<std::uint8_t, 32>;
using AeadNonce = std::array<std::uint8_t, 12>;

inline constexpr std::size_t kAeadTagBytes = 16;

// AES-256-GCM. Output of seal is ciphertext || 16-byte tag.
Bytes aead_seal(const AeadKey& key, const AeadNonce& nonce, ByteSpan aad, ByteSpan plaintext);
std::optional<Bytes> aead_open(const AeadKey& key, const AeadNonce& nonce, ByteSpan aad,
                               ByteSpan sealed);

}  // namespace qpadl::crypto
