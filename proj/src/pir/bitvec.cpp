#include "qpadl/pir/bitvec.hpp"

#include <bit>

#include "qpadl/common/error.hpp"

namespace qpadl::pir {

BitVector BitVector::unit(std::size_t bits, std::size_t index) {
  if (index >= bits) fail(Errc::kParameter, "unit vector index out of range");
  BitVector v(bits);
  v.set(index, true);
  return v;
}

BitVector BitVector::random(std::size_t bits, Rng& rng) {
  BitVector v(bits);
  for (auto& w : v.words_) w = rng.next_u64();
  v.clear_tail();
  return v;
}

BitVector BitVector::from_bytes(ByteSpan bytes, std::size_t bits) {
  if (bytes.size() != (bits + 7) / 8) fail(Errc::kGeometry, "bit vector byte length mismatch");
  BitVector v(bits);
  for (std::size_t i = 0; i < bytes.size(); ++i) v.words_[i / 8] |= std::uint64_t{bytes[i]} << (8 * (i % 8));
  const auto before = v.words_;
  v.clear_tail();
  if (v.words_ != before) fail(Errc::kFormat, "bit vector has bits past its length");
  return v;
}

void BitVector::set(std::size_t i, bool v) {
  const std::uint64_t bit = std::uint64_t{1} << (i % 64);
  if (v) {
    words_[i / 64] |= bit;
  } else {
    words_[i / 64] &= ~bit;
  }
}

std::size_t BitVector::popcount() const {
  std::size_t n = 0;
  for (auto w : words_) n += static_cast<std::size_t>(std::popcount(w));
  return n;
}

Bytes BitVector::to_bytes() const {
  Bytes out((bits_ + 7) / 8);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<std::uint8_t>(words_[i / 8] >> (8 * (i % 8)));
  return out;
}

BitVector& BitVector::operator^=(const BitVector& other) {
  if (other.bits_ != bits_) fail(Errc::kGeometry, "bit vector length mismatch");
  for (std::size_t i = 0; i < words_.size(); ++i) words_[i] ^= other.words_[i];
  return *this;
}

void BitVector::clear_tail() {
  if (bits_ % 64 != 0) words_.back() &= (std::uint64_t{1} << (bits_ % 64)) - 1;
}

void xor_into(Bytes& a, ByteSpan b) {
  if (a.size() != b.size()) fail(Errc::kGeometry, "payload length mismatch");
  for (std::size_t i = 0; i < a.size(); ++i) a[i] ^= b[i];
}

}  // namespace qpadl::pir
