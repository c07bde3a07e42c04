#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "qpadl/common/bytes.hpp"
#include "qpadl/common/rng.hpp"

namespace qpadl::pir {

// Fixed-length bit vector; bit i lives in word i/64 at position i%64. Bits
// past size() are always zero.
class BitVector {
 public:
  BitVector() = default;
  explicit BitVector(std::size_t bits) : bits_(bits), words_((bits + 63) / 64, 0) {}

  static BitVector unit(std::size_t bits, std::size_t index);
  static BitVector random(std::size_t bits, Rng& rng);
  // Little-endian bit order inside each byte; length must be ceil(bits/8).
  static BitVector from_bytes(ByteSpan bytes, std::size_t bits);

  std::size_t size() const { return bits_; }
  bool get(std::size_t i) const { return (words_[i / 64] >> (i % 64)) & 1u; }
  void set(std::size_t i, bool v);
  std::size_t popcount() const;

  const std::vector<std::uint64_t>& words() const { return words_; }
  Bytes to_bytes() const;

  BitVector& operator^=(const BitVector& other);
  friend BitVector operator^(BitVector a, const BitVector& b) { return a ^= b; }
  bool operator==(const BitVector&) const = default;

 private:
  void clear_tail();

  std::size_t bits_ = 0;
  std::vector<std::uint64_t> words_;
};

// a ^= b over equal-length byte strings.
void xor_into(Bytes& a, ByteSpan b);

}  // namespace qpadl::pir
