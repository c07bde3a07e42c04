#include "qpadl/db/matrix.hpp"

#include <algorithm>
#include <cstring>

#include "qpadl/common/error.hpp"

namespace qpadl::db {

DbMatrix::DbMatrix(std::uint64_t rows, std::uint32_t block_bits) : rows_(rows), block_bits_(block_bits) {
  if (rows == 0) fail(Errc::kParameter, "database needs at least one row");
  if (block_bits == 0 || block_bits % 64 != 0) fail(Errc::kParameter, "block size must be a positive multiple of 64 bits");
  payload_ = std::make_shared<std::vector<std::uint64_t>>(rows * (block_bits / 64), 0);
}

DbMatrix DbMatrix::random(std::uint64_t rows, std::uint32_t block_bits, Rng& rng) {
  DbMatrix m(rows, block_bits);
  auto& words = m.writable();
  for (auto& w : words) w = rng.next_u64();
  return m;
}

std::span<const std::uint64_t> DbMatrix::row(std::uint64_t i) const {
  if (i >= rows_) fail(Errc::kGeometry, "row index out of range");
  return {payload_->data() + i * u64_per_row(), u64_per_row()};
}

ByteSpan DbMatrix::row_bytes(std::uint64_t i) const {
  auto r = row(i);
  return {reinterpret_cast<const std::uint8_t*>(r.data()), block_bytes()};
}

ByteSpan DbMatrix::payload_bytes() const {
  if (!payload_) return {};
  return {reinterpret_cast<const std::uint8_t*>(payload_->data()), payload_->size() * 8};
}

std::vector<std::uint64_t>& DbMatrix::writable() {
  if (payload_.use_count() > 1) payload_ = std::make_shared<std::vector<std::uint64_t>>(*payload_);
  return *payload_;
}

void DbMatrix::set_row(std::uint64_t i, ByteSpan bytes) {
  if (i >= rows_) fail(Errc::kGeometry, "row index out of range");
  if (bytes.size() > block_bytes()) fail(Errc::kCapacity, "row content exceeds block size");
  auto& words = writable();
  auto* dst = reinterpret_cast<std::uint8_t*>(words.data() + i * u64_per_row());
  std::memcpy(dst, bytes.data(), bytes.size());
  std::memset(dst + bytes.size(), 0, block_bytes() - bytes.size());
}

void DbMatrix::set_payload(ByteSpan bytes) {
  if (bytes.size() != rows_ * block_bytes()) fail(Errc::kGeometry, "payload size mismatch");
  auto& words = writable();
  std::memcpy(words.data(), bytes.data(), bytes.size());
}

bool DbMatrix::same_payload(const DbMatrix& other) const {
  if (rows_ != other.rows_ || block_bits_ != other.block_bits_) return false;
  if (payload_ == other.payload_) return true;
  return *payload_ == *other.payload_;
}

}  // namespace qpadl::db
