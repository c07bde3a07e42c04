#pragma once

#include <bit>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "qpadl/common/bytes.hpp"
#include "qpadl/common/rng.hpp"
#include "qpadl/common/types.hpp"

namespace qpadl::db {

static_assert(std::endian::native == std::endian::little, "row byte views assume a little-endian host");

// r x b bit matrix, one block per row. Rows are stored as 64-bit words so
// the kernels can XOR whole words; b must be a multiple of 64. The payload is
// shared between copies and detached on the first write.
class DbMatrix {
 public:
  static constexpr std::uint32_t kWordBits = 8;  // s_DB counts 8-bit words

  DbMatrix() = default;
  DbMatrix(std::uint64_t rows, std::uint32_t block_bits);

  static DbMatrix random(std::uint64_t rows, std::uint32_t block_bits, Rng& rng);

  std::uint64_t rows() const { return rows_; }
  std::uint32_t block_bits() const { return block_bits_; }
  std::uint32_t block_bytes() const { return block_bits_ / 8; }
  std::uint32_t words_per_row() const { return block_bits_ / kWordBits; }
  std::uint32_t u64_per_row() const { return block_bits_ / 64; }

  std::span<const std::uint64_t> row(std::uint64_t i) const;
  ByteSpan row_bytes(std::uint64_t i) const;
  const std::uint64_t* data() const { return payload_ ? payload_->data() : nullptr; }
  ByteSpan payload_bytes() const;

  void set_row(std::uint64_t i, ByteSpan bytes);  // shorter input is zero padded
  void set_payload(ByteSpan bytes);

  PirScheme scheme = PirScheme::kNone;
  PowKind pow = PowKind::kNone;

  // Payload equality (metadata ignored).
  bool same_payload(const DbMatrix& other) const;
  bool shares_payload_with(const DbMatrix& other) const { return payload_ == other.payload_; }

 private:
  std::vector<std::uint64_t>& writable();

  std::uint64_t rows_ = 0;
  std::uint32_t block_bits_ = 0;
  std::shared_ptr<std::vector<std::uint64_t>> payload_;
};

}  // namespace qpadl::db
