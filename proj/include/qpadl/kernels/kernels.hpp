#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "qpadl/common/rng.hpp"

namespace qpadl::db {
class DbMatrix;
}

namespace qpadl::kernels {

// Row-major packed bit matrix; each row is padded to whole 64-bit words.
struct BitMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;  // bits per row
  std::size_t words = 0; // u64 words per row
  std::vector<std::uint64_t> data;

  BitMatrix() = default;
  BitMatrix(std::size_t rows, std::size_t cols);

  std::uint64_t* row(std::size_t i) { return data.data() + i * words; }
  const std::uint64_t* row(std::size_t i) const { return data.data() + i * words; }
  bool get(std::size_t i, std::size_t j) const { return (row(i)[j / 64] >> (j % 64)) & 1u; }
  void set(std::size_t i, std::size_t j, bool v);
  bool operator==(const BitMatrix&) const = default;
};

// Row-major matrix of field elements.
struct FieldMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint32_t> data;

  FieldMatrix() = default;
  FieldMatrix(std::size_t rows, std::size_t cols) : rows(rows), cols(cols), data(rows * cols, 0) {}
  std::uint32_t& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  std::uint32_t at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
  bool operator==(const FieldMatrix&) const = default;
};

// Read-only view of r database rows as 64-bit words.
struct Gf2DbView {
  const std::uint64_t* data = nullptr;
  std::size_t rows = 0;
  std::size_t words = 0;  // u64 words per row

  static Gf2DbView of(const db::DbMatrix& db);
  Gf2DbView slice(std::size_t first_row, std::size_t count) const;
  const std::uint64_t* row(std::size_t i) const { return data + i * words; }
};

// Read-only view of database rows as field words of `word_bits` bits
// (1, 2, 4 or 8), packed little-endian inside each row.
struct FieldDbView {
  const std::uint8_t* data = nullptr;
  std::size_t rows = 0;
  std::size_t row_bytes = 0;
  unsigned word_bits = 8;

  static FieldDbView of(const db::DbMatrix& db, unsigned word_bits);
  std::size_t cols() const { return row_bytes * 8 / word_bits; }
  std::uint32_t at(std::size_t i, std::size_t j) const;
};

struct Tiling {
  std::size_t bm = 64;  // queries per block
  std::size_t bn = 64;  // output columns per block
  std::size_t br = 8;   // depth step between lazy reductions
  std::size_t tm = 8;   // register tile, queries
  std::size_t tn = 8;   // register tile, columns
};

// br = tm = tn = 8; bm = bn = 128 when q >= 128 and b >= 128, else 64.
Tiling default_tiling(std::size_t queries, std::size_t cols);

struct Gf2Options {
  bool bitmask = false;        // branch-free masked accumulation
  std::size_t lane_words = 16; // column lane width in 64-bit words
  std::size_t row_tile = 256;  // rows per cache tile (multiple of 64)
};

// out[i] = XOR of db rows j with queries[i][j] = 1.
BitMatrix batch_matvec_gf2(const BitMatrix& queries, const Gf2DbView& db, unsigned workers,
                           const Gf2Options& options = {});

// out = queries * db mod p.
FieldMatrix batch_matmul_field(const FieldMatrix& queries, const FieldDbView& db, std::uint32_t modulus,
                               unsigned workers, const Tiling& tiling);
FieldMatrix batch_matmul_field(const FieldMatrix& queries, const FieldDbView& db, std::uint32_t modulus,
                               unsigned workers);

// Per-query reference loops.
BitMatrix scalar_matvec_gf2(const BitMatrix& queries, const Gf2DbView& db);
FieldMatrix scalar_matmul_field(const FieldMatrix& queries, const FieldDbView& db, std::uint32_t modulus);

// Largest modulus for which 64-bit accumulation with lazy reduction is safe.
inline constexpr std::uint32_t kMaxFieldModulus = 1u << 17;

enum class Backend { kScalar, kDataParallel };

class Kernel {
 public:
  virtual ~Kernel() = default;
  virtual std::string_view name() const = 0;
  virtual BitMatrix gf2(const BitMatrix& queries, const Gf2DbView& db) const = 0;
  virtual FieldMatrix field(const FieldMatrix& queries, const FieldDbView& db, std::uint32_t modulus) const = 0;
};

std::shared_ptr<const Kernel> backend_select(Backend kind, unsigned workers = 4);
std::string_view backend_name(Backend kind);

}  // namespace qpadl::kernels
