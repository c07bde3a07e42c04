#include "qpadl/kernels/kernels.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <limits>

#if defined(__AVX512F__)
#include <immintrin.h>
#endif

#include "pool.hpp"
#include "qpadl/common/error.hpp"
#include "qpadl/db/matrix.hpp"

namespace qpadl::kernels {

BitMatrix::BitMatrix(std::size_t rows, std::size_t cols)
    : rows(rows), cols(cols), words((cols + 63) / 64), data(rows * ((cols + 63) / 64), 0) {}

void BitMatrix::set(std::size_t i, std::size_t j, bool v) {
  const std::uint64_t bit = std::uint64_t{1} << (j % 64);
  if (v) {
    row(i)[j / 64] |= bit;
  } else {
    row(i)[j / 64] &= ~bit;
  }
}

Gf2DbView Gf2DbView::of(const db::DbMatrix& db) { return {db.data(), db.rows(), db.u64_per_row()}; }

Gf2DbView Gf2DbView::slice(std::size_t first_row, std::size_t count) const {
  if (first_row + count > rows) fail(Errc::kGeometry, "row slice out of range");
  return {data + first_row * words, count, words};
}

FieldDbView FieldDbView::of(const db::DbMatrix& db, unsigned word_bits) {
  if (word_bits == 0 || word_bits > 8 || (8 % word_bits) != 0) fail(Errc::kParameter, "field word width must divide 8");
  return {db.row_bytes(0).data(), db.rows(), db.block_bytes(), word_bits};
}

std::uint32_t FieldDbView::at(std::size_t i, std::size_t j) const {
  const std::uint8_t* r = data + i * row_bytes;
  if (word_bits == 8) return r[j];
  const std::size_t bit = j * word_bits;
  return (r[bit / 8] >> (bit % 8)) & ((1u << word_bits) - 1u);
}

Tiling default_tiling(std::size_t queries, std::size_t cols) {
  Tiling t;
  const std::size_t block = queries >= 128 && cols >= 128 ? 128 : 64;
  t.bm = block;
  t.bn = block;
  return t;
}

namespace {

void check_gf2(const BitMatrix& q, const Gf2DbView& db) {
  if (q.cols != db.rows) fail(Errc::kGeometry, "query length differs from row count");
  if (q.rows == 0) fail(Errc::kGeometry, "empty query batch");
}

void check_field(const FieldMatrix& q, const FieldDbView& db, std::uint32_t p) {
  if (q.cols != db.rows) fail(Errc::kGeometry, "query length differs from row count");
  if (q.rows == 0) fail(Errc::kGeometry, "empty query batch");
  if (p < 2 || p > kMaxFieldModulus) fail(Errc::kParameter, "field modulus out of range");
}

// Number of products (a multiple of `step`) that fit a u64 accumulator
// holding a reduced value.
std::size_t safe_depth(std::uint32_t p, std::size_t step) {
  const std::uint64_t sq = std::uint64_t{p - 1} * (p - 1);
  if (sq == 0) return std::numeric_limits<std::size_t>::max() / 2;
  const std::uint64_t room = (std::numeric_limits<std::uint64_t>::max() - p) / sq;
  return std::max<std::size_t>(step, static_cast<std::size_t>(room / step * step));
}

// One (query block, column lane) tile of the GF(2) kernel. Rows are visited
// tile by tile so a lane slice of the database stays in L1 while every
// query of the block passes over it. Selected rows land in one of eight
// accumulators by row index mod 8; the accumulators are folded at the end of
// every row tile.
template <std::size_t L>
void gf2_tile(const BitMatrix& q, const Gf2DbView& db, BitMatrix& out, std::size_t q0, std::size_t q1,
              std::size_t lane0, std::size_t lane_len, const Gf2Options& opt) {
  const std::size_t len = L == 0 ? lane_len : L;
  const std::size_t tile_words = opt.row_tile / 64;
  const std::size_t qwords = q.words;
  std::array<std::array<std::uint64_t, L == 0 ? 64 : L>, 8> acc;
  for (std::size_t w0 = 0; w0 < qwords; w0 += tile_words) {
    const std::size_t w1 = std::min(qwords, w0 + tile_words);
    for (std::size_t i = q0; i < q1; ++i) {
      for (auto& a : acc) std::fill_n(a.begin(), len, 0);
      const std::uint64_t* qrow = q.row(i);
      for (std::size_t w = w0; w < w1; ++w) {
        std::uint64_t bits = qrow[w];
        if (w + 1 == qwords && db.rows % 64 != 0) bits &= (std::uint64_t{1} << (db.rows % 64)) - 1;
        if (opt.bitmask) {
          for (std::size_t b = 0; b < 64 && w * 64 + b < db.rows; ++b) {
            const std::uint64_t mask = 0 - ((bits >> b) & 1u);
            const std::uint64_t* src = db.row(w * 64 + b) + lane0;
            auto& a = acc[b & 7];
            for (std::size_t k = 0; k < len; ++k) a[k] ^= src[k] & mask;
          }
        } else {
          while (bits != 0) {
            const std::size_t b = static_cast<std::size_t>(std::countr_zero(bits));
            bits &= bits - 1;
            const std::uint64_t* src = db.row(w * 64 + b) + lane0;
            auto& a = acc[b & 7];
            for (std::size_t k = 0; k < len; ++k) a[k] ^= src[k];
          }
        }
      }
      std::uint64_t* dst = out.row(i) + lane0;
      for (std::size_t k = 0; k < len; ++k) {
        dst[k] ^= acc[0][k] ^ acc[1][k] ^ acc[2][k] ^ acc[3][k] ^ acc[4][k] ^ acc[5][k] ^ acc[6][k] ^ acc[7][k];
      }
    }
  }
}

constexpr std::size_t kKc = 256;  // depth panel of the field kernel

// 8x8 register tile: c[x][y] += sum_k a[k][x] * b[k][y] over one panel.
void micro_tile(const std::uint64_t* __restrict pa, const std::uint32_t* __restrict pb, std::size_t kc,
                std::size_t sa, std::size_t sb, std::uint64_t* __restrict c, std::size_t sc) {
#if defined(__AVX512F__)
  __m512i acc[8];
  for (int x = 0; x < 8; ++x) acc[x] = _mm512_loadu_si512(c + x * sc);
  for (std::size_t k = 0; k < kc; ++k) {
    const std::uint64_t* a = pa + k * sa;
    const __m512i b = _mm512_cvtepu32_epi64(_mm256_loadu_si256(reinterpret_cast<const __m256i*>(pb + k * sb)));
    for (int x = 0; x < 8; ++x) {
      acc[x] = _mm512_add_epi64(acc[x], _mm512_mul_epu32(_mm512_set1_epi64(a[x]), b));
    }
  }
  for (int x = 0; x < 8; ++x) _mm512_storeu_si512(c + x * sc, acc[x]);
#else
  std::uint64_t acc[8][8];
  for (int x = 0; x < 8; ++x) {
    for (int y = 0; y < 8; ++y) acc[x][y] = c[x * sc + y];
  }
  for (std::size_t k = 0; k < kc; ++k) {
    const std::uint64_t* a = pa + k * sa;
    const std::uint32_t* b = pb + k * sb;
    for (int x = 0; x < 8; ++x) {
      const std::uint64_t ax = a[x];
      for (int y = 0; y < 8; ++y) acc[x][y] += ax * b[y];
    }
  }
  for (int x = 0; x < 8; ++x) {
    for (int y = 0; y < 8; ++y) c[x * sc + y] = acc[x][y];
  }
#endif
}

}  // namespace

BitMatrix batch_matvec_gf2(const BitMatrix& queries, const Gf2DbView& db, unsigned workers,
                           const Gf2Options& options) {
  check_gf2(queries, db);
  if (workers == 0) fail(Errc::kParameter, "workers must be at least 1");
  if (options.row_tile == 0 || options.row_tile % 64 != 0) fail(Errc::kParameter, "row tile must be a multiple of 64");
  if (options.lane_words == 0 || options.lane_words > 64) fail(Errc::kParameter, "lane width must be in [1, 64] words");
  BitMatrix out(queries.rows, db.words * 64);
  const std::size_t lane = std::min(options.lane_words, db.words);
  const std::size_t lanes = (db.words + lane - 1) / lane;
  const std::size_t qblock = 32;
  const std::size_t qblocks = (queries.rows + qblock - 1) / qblock;
  detail::parallel_for(qblocks * lanes, workers, [&](std::size_t task) {
    const std::size_t qb = task / lanes;
    const std::size_t ln = task % lanes;
    const std::size_t q0 = qb * qblock;
    const std::size_t q1 = std::min(queries.rows, q0 + qblock);
    const std::size_t lane0 = ln * lane;
    const std::size_t len = std::min(lane, db.words - lane0);
    if (len == 16) {
      gf2_tile<16>(queries, db, out, q0, q1, lane0, len, options);
    } else if (len == 8) {
      gf2_tile<8>(queries, db, out, q0, q1, lane0, len, options);
    } else {
      gf2_tile<0>(queries, db, out, q0, q1, lane0, len, options);
    }
  });
  return out;
}

FieldMatrix batch_matmul_field(const FieldMatrix& queries, const FieldDbView& db, std::uint32_t p,
                               unsigned workers) {
  return batch_matmul_field(queries, db, p, workers, default_tiling(queries.rows, db.cols()));
}

FieldMatrix batch_matmul_field(const FieldMatrix& queries, const FieldDbView& db, std::uint32_t p,
                               unsigned workers, const Tiling& t) {
  check_field(queries, db, p);
  if (workers == 0) fail(Errc::kParameter, "workers must be at least 1");
  if (t.tm != 8 || t.tn != 8) fail(Errc::kParameter, "register tile is fixed at 8x8");
  if (t.bm == 0 || t.bn == 0 || t.bm % 8 != 0 || t.bn % 8 != 0 || t.br == 0) fail(Errc::kParameter, "bad tiling");
  const std::size_t m = queries.rows;
  const std::size_t n = db.cols();
  const std::size_t r = db.rows;
  // Accumulators are reduced lazily, after at most this many products (a
  // multiple of br); for the default modulus that is once at the end.
  const std::size_t reduce_every = safe_depth(p, t.br);
  if (reduce_every < kKc) fail(Errc::kParameter, "field modulus too large for lazy reduction");
  FieldMatrix out(m, n);
  const std::size_t mblocks = (m + t.bm - 1) / t.bm;
  const std::size_t nblocks = (n + t.bn - 1) / t.bn;

  // The query matrix is packed once, per query block, as [k][i] with rows
  // padded to a multiple of 8. Elements are widened to 64 bits so the
  // broadcast in the micro tile is a plain load.
  std::vector<std::size_t> pack_offset(mblocks + 1, 0);
  for (std::size_t mb = 0; mb < mblocks; ++mb) {
    const std::size_t bm = std::min(t.bm, m - mb * t.bm);
    pack_offset[mb + 1] = pack_offset[mb] + r * ((bm + 7) / 8 * 8);
  }
  std::vector<std::uint64_t> packed(pack_offset[mblocks], 0);
  for (std::size_t mb = 0; mb < mblocks; ++mb) {
    const std::size_t i0 = mb * t.bm;
    const std::size_t bm = std::min(t.bm, m - i0);
    const std::size_t bm_pad = (bm + 7) / 8 * 8;
    std::uint64_t* dst = packed.data() + pack_offset[mb];
    for (std::size_t i = 0; i < bm; ++i) {
      const std::uint32_t* src = queries.data.data() + (i0 + i) * queries.cols;
      for (std::size_t k = 0; k < r; ++k) dst[k * bm_pad + i] = src[k];
    }
  }

  detail::parallel_for(mblocks * nblocks, workers, [&](std::size_t task) {
    const std::size_t mb = task / nblocks;
    const std::size_t i0 = mb * t.bm;
    const std::size_t j0 = (task % nblocks) * t.bn;
    const std::size_t bm = std::min(t.bm, m - i0);
    const std::size_t bn = std::min(t.bn, n - j0);
    const std::size_t bm_pad = (bm + 7) / 8 * 8;
    const std::size_t bn_pad = (bn + 7) / 8 * 8;
    std::vector<std::uint64_t> c(bm_pad * bn_pad, 0);
    std::vector<std::uint32_t> pb(kKc * bn_pad, 0);
    std::size_t pending = 0;  // products accumulated since the last reduction

    for (std::size_t k0 = 0; k0 < r; k0 += kKc) {
      const std::size_t kc = std::min(kKc, r - k0);
      const std::uint64_t* pa = packed.data() + pack_offset[mb] + k0 * bm_pad;
      // Pack the database panel as [k][j]; padding columns stay zero.
      for (std::size_t k = 0; k < kc; ++k) {
        std::uint32_t* dst = pb.data() + k * bn_pad;
        if (db.word_bits == 8) {
          const std::uint8_t* src = db.data + (k0 + k) * db.row_bytes + j0;
          for (std::size_t j = 0; j < bn; ++j) dst[j] = src[j];
        } else {
          for (std::size_t j = 0; j < bn; ++j) dst[j] = db.at(k0 + k, j0 + j);
        }
      }
      for (std::size_t ii = 0; ii < bm_pad; ii += 8) {
        for (std::size_t jj = 0; jj < bn_pad; jj += 8) {
          micro_tile(pa + ii, pb.data() + jj, kc, bm_pad, bn_pad, c.data() + ii * bn_pad + jj, bn_pad);
        }
      }
      pending += kc;
      if (pending + kKc > reduce_every || k0 + kc >= r) {
        for (auto& v : c) v %= p;
        pending = 0;
      }
    }
    for (std::size_t i = 0; i < bm; ++i) {
      for (std::size_t j = 0; j < bn; ++j) out.at(i0 + i, j0 + j) = static_cast<std::uint32_t>(c[i * bn_pad + j]);
    }
  });
  return out;
}

BitMatrix scalar_matvec_gf2(const BitMatrix& queries, const Gf2DbView& db) {
  check_gf2(queries, db);
  BitMatrix out(queries.rows, db.words * 64);
  for (std::size_t i = 0; i < queries.rows; ++i) {
    std::uint64_t* acc = out.row(i);
    for (std::size_t j = 0; j < db.rows; ++j) {
      if (!queries.get(i, j)) continue;
      const std::uint64_t* src = db.row(j);
      for (std::size_t k = 0; k < db.words; ++k) acc[k] ^= src[k];
    }
  }
  return out;
}

FieldMatrix scalar_matmul_field(const FieldMatrix& queries, const FieldDbView& db, std::uint32_t p) {
  check_field(queries, db, p);
  const std::size_t n = db.cols();
  const std::size_t reduce_every = safe_depth(p, 1);
  FieldMatrix out(queries.rows, n);
  std::vector<std::uint64_t> acc(n);
  std::vector<std::uint32_t> unpacked(n);
  for (std::size_t i = 0; i < queries.rows; ++i) {
    std::fill(acc.begin(), acc.end(), 0);
    std::size_t since = 0;
    for (std::size_t j = 0; j < db.rows; ++j) {
      const std::uint64_t qv = queries.at(i, j);
      if (db.word_bits == 8) {
        const std::uint8_t* src = db.data + j * db.row_bytes;
        for (std::size_t c = 0; c < n; ++c) acc[c] += qv * src[c];
      } else {
        for (std::size_t c = 0; c < n; ++c) unpacked[c] = db.at(j, c);
        for (std::size_t c = 0; c < n; ++c) acc[c] += qv * unpacked[c];
      }
      if (++since == reduce_every) {
        for (auto& v : acc) v %= p;
        since = 0;
      }
    }
    for (std::size_t c = 0; c < n; ++c) out.at(i, c) = static_cast<std::uint32_t>(acc[c] % p);
  }
  return out;
}

namespace {

class ScalarKernel final : public Kernel {
 public:
  std::string_view name() const override { return "scalar"; }
  BitMatrix gf2(const BitMatrix& q, const Gf2DbView& db) const override { return scalar_matvec_gf2(q, db); }
  FieldMatrix field(const FieldMatrix& q, const FieldDbView& db, std::uint32_t p) const override {
    return scalar_matmul_field(q, db, p);
  }
};

class ParallelKernel final : public Kernel {
 public:
  explicit ParallelKernel(unsigned workers) : workers_(workers) {}
  std::string_view name() const override { return "data-parallel"; }
  BitMatrix gf2(const BitMatrix& q, const Gf2DbView& db) const override {
    return batch_matvec_gf2(q, db, workers_);
  }
  FieldMatrix field(const FieldMatrix& q, const FieldDbView& db, std::uint32_t p) const override {
    return batch_matmul_field(q, db, p, workers_);
  }

 private:
  unsigned workers_;
};

}  // namespace

std::shared_ptr<const Kernel> backend_select(Backend kind, unsigned workers) {
  if (workers == 0) fail(Errc::kParameter, "workers must be at least 1");
  switch (kind) {
    case Backend::kScalar: return std::make_shared<ScalarKernel>();
    case Backend::kDataParallel: return std::make_shared<ParallelKernel>(workers);
  }
  fail(Errc::kParameter, "unknown kernel backend");
}

std::string_view backend_name(Backend kind) {
  return kind == Backend::kScalar ? "scalar" : "data-parallel";
}

}  // namespace qpadl::kernels
