#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "qpadl/common/bytes.hpp"
#include "qpadl/common/types.hpp"
#include "qpadl/pir/bitvec.hpp"

namespace qpadl::pir {

// Framed query or response: u8 scheme | u8 server | u32 length | payload.
struct PirMessage {
  PirScheme scheme = PirScheme::kNone;
  std::uint8_t server = 0;
  Bytes payload;

  Bytes encode() const;
  static PirMessage decode(ByteSpan data);
  bool operator==(const PirMessage&) const = default;
};

// Field elements as little-endian u32.
Bytes encode_field_elements(std::span<const std::uint32_t> values);
std::vector<std::uint32_t> decode_field_elements(ByteSpan data);

Bytes encode_bits(const BitVector& v);
BitVector decode_bits(ByteSpan data, std::size_t bits);

// OOP payloads lead with the session id.
Bytes encode_oop_query(std::uint64_t session, const BitVector& q);
std::pair<std::uint64_t, BitVector> decode_oop_query(ByteSpan data, std::size_t bits);
Bytes encode_oop_response(std::uint64_t session, ByteSpan block);
std::pair<std::uint64_t, Bytes> decode_oop_response(ByteSpan data);

}  // namespace qpadl::pir
