#include <gtest/gtest.h>

#include "qpadl/db/matrix.hpp"
#include "qpadl/kernels/kernels.hpp"
#include "support.hpp"

using namespace qpadl;
using namespace qpadl::kernels;
using qpadl::test::error_code;

namespace {

double unit(Rng& rng) { return static_cast<double>(rng.uniform_below(1u << 20)) / (1u << 20); }

BitMatrix random_bits(std::size_t rows, std::size_t cols, Rng& rng, double density = 0.5) {
  BitMatrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) m.set(i, j, unit(rng) < density);
  }
  return m;
}

FieldMatrix random_field(std::size_t rows, std::size_t cols, std::uint32_t p, Rng& rng) {
  FieldMatrix m(rows, cols);
  for (auto& v : m.data) v = static_cast<std::uint32_t>(rng.uniform_below(p));
  return m;
}

// Word j of a row: bits [j*w, (j+1)*w) counting little-endian through the bytes.
std::uint32_t word_at(ByteSpan row, std::size_t j, unsigned w) {
  std::uint32_t v = 0;
  for (unsigned k = 0; k < w; ++k) {
    const std::size_t bit = j * w + k;
    v |= static_cast<std::uint32_t>((row[bit / 8] >> (bit % 8)) & 1u) << k;
  }
  return v;
}

FieldMatrix naive_field(const FieldMatrix& q, const db::DbMatrix& db, unsigned w, std::uint32_t p) {
  const std::size_t cols = db.block_bytes() * 8 / w;
  FieldMatrix out(q.rows, cols);
  for (std::size_t i = 0; i < q.rows; ++i) {
    for (std::size_t c = 0; c < cols; ++c) {
      std::uint64_t acc = 0;
      for (std::size_t j = 0; j < q.cols; ++j) {
        acc = (acc + std::uint64_t{q.at(i, j)} * word_at(db.row_bytes(j), c, w)) % p;
      }
      out.at(i, c) = static_cast<std::uint32_t>(acc);
    }
  }
  return out;
}

BitMatrix naive_gf2(const BitMatrix& q, const db::DbMatrix& db) {
  BitMatrix out(q.rows, db.block_bytes() * 8);
  for (std::size_t i = 0; i < q.rows; ++i) {
    const auto acc = test::naive_fold(db, [&](std::uint64_t j) { return q.get(i, j); });
    for (std::size_t b = 0; b < out.cols; ++b) out.set(i, b, (acc[b / 8] >> (b % 8)) & 1u);
  }
  return out;
}

}  // namespace

TEST(Kernels, DefaultTiling) {
  const auto small = default_tiling(64, 512);
  EXPECT_EQ(small.bm, 64u);
  EXPECT_EQ(small.bn, 64u);
  const auto big = default_tiling(128, 128);
  EXPECT_EQ(big.bm, 128u);
  EXPECT_EQ(big.bn, 128u);
  EXPECT_EQ(big.br, 8u);
  EXPECT_EQ(big.tm, 8u);
  EXPECT_EQ(big.tn, 8u);
  EXPECT_EQ(default_tiling(128, 127).bm, 64u);
}

TEST(Kernels, Gf2FuzzAgainstScalarAndNaive) {
  SeededRng rng(21);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t rows = 1 + rng.uniform_below(700);
    const std::uint32_t bits = 64 * static_cast<std::uint32_t>(1 + rng.uniform_below(12));
    const std::size_t q = 1 + rng.uniform_below(70);
    const auto db = db::DbMatrix::random(rows, bits, rng);
    const auto queries = random_bits(q, rows, rng, unit(rng));
    const auto view = Gf2DbView::of(db);
    Gf2Options opts;
    opts.bitmask = rng.uniform_below(2) == 1;
    opts.lane_words = 1 + rng.uniform_below(16);
    opts.row_tile = 64 * (1 + rng.uniform_below(6));
    const unsigned workers = 1 + static_cast<unsigned>(rng.uniform_below(5));
    const auto scalar = scalar_matvec_gf2(queries, view);
    ASSERT_EQ(batch_matvec_gf2(queries, view, workers, opts), scalar) << "trial " << trial;
    if (trial < 8) {
      ASSERT_EQ(scalar, naive_gf2(queries, db)) << "trial " << trial;
    }
  }
}

TEST(Kernels, Gf2IdentityAndZeroQueries) {
  SeededRng rng(22);
  const auto db = db::DbMatrix::random(128, 256, rng);
  const auto view = Gf2DbView::of(db);
  BitMatrix identity(128, 128);
  for (std::size_t i = 0; i < 128; ++i) identity.set(i, i, true);
  const auto out = batch_matvec_gf2(identity, view, 4);
  for (std::size_t i = 0; i < 128; ++i) {
    const auto row = db.row_bytes(i);
    for (std::size_t b = 0; b < 256; ++b) ASSERT_EQ(out.get(i, b), ((row[b / 8] >> (b % 8)) & 1u) != 0);
  }
  const BitMatrix zero(5, 128);
  EXPECT_EQ(batch_matvec_gf2(zero, view, 3), BitMatrix(5, 256));
}

TEST(Kernels, FieldFuzzAgainstScalar) {
  SeededRng rng(23);
  const std::uint32_t primes[] = {2, 3, 257, 65537, 131071};
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t rows = 1 + rng.uniform_below(300);
    const auto db = db::DbMatrix::random(rows, 64 * static_cast<std::uint32_t>(1 + rng.uniform_below(4)), rng);
    const unsigned w = 1u << rng.uniform_below(4);
    const auto p = primes[rng.uniform_below(5)];
    const auto q = random_field(1 + rng.uniform_below(40), rows, p, rng);
    const auto view = FieldDbView::of(db, w);
    Tiling t;
    t.bm = 8 * (1 + rng.uniform_below(16));
    t.bn = 8 * (1 + rng.uniform_below(16));
    t.br = 1 + rng.uniform_below(32);
    const unsigned workers = 1 + static_cast<unsigned>(rng.uniform_below(5));
    ASSERT_EQ(batch_matmul_field(q, view, p, workers, t), scalar_matmul_field(q, view, p)) << "trial " << trial;
  }
}

TEST(Kernels, FieldAgainstTripleLoop) {
  SeededRng rng(24);
  const auto db = db::DbMatrix::random(1u << 10, 512 * 8, rng);
  const auto q = random_field(64, 1u << 10, 65537, rng);
  const auto expected = naive_field(q, db, 8, 65537);
  EXPECT_EQ(batch_matmul_field(q, FieldDbView::of(db, 8), 65537, 4), expected);
  EXPECT_EQ(scalar_matmul_field(q, FieldDbView::of(db, 8), 65537), expected);
}

TEST(Kernels, LazyReductionAtLargestModulus) {
  // All terms at their maximum: (p-1) * 255 summed over 4096 rows.
  db::DbMatrix db(4096, 128);
  Bytes ones(16, 0xff);
  for (std::uint64_t i = 0; i < db.rows(); ++i) db.set_row(i, ones);
  const std::uint32_t p = kMaxFieldModulus - 1;
  FieldMatrix q(8, 4096);
  std::fill(q.data.begin(), q.data.end(), p - 1);
  const auto out = batch_matmul_field(q, FieldDbView::of(db, 8), p, 2);
  const auto expected = static_cast<std::uint32_t>(std::uint64_t{p - 1} * 255 % p * 4096 % p);
  for (auto v : out.data) ASSERT_EQ(v, expected);
  EXPECT_EQ(error_code([&] { batch_matmul_field(q, FieldDbView::of(db, 8), kMaxFieldModulus + 1, 2); }),
            Errc::kParameter);
}

TEST(Kernels, ModulusTwoMatchesGf2) {
  SeededRng rng(26);
  const auto db = db::DbMatrix::random(333, 192, rng);
  const auto bits = random_bits(17, 333, rng);
  FieldMatrix q(17, 333);
  for (std::size_t i = 0; i < 17; ++i) {
    for (std::size_t j = 0; j < 333; ++j) q.at(i, j) = bits.get(i, j);
  }
  const auto f = batch_matmul_field(q, FieldDbView::of(db, 1), 2, 3);
  const auto g = batch_matvec_gf2(bits, Gf2DbView::of(db), 3);
  for (std::size_t i = 0; i < 17; ++i) {
    for (std::size_t b = 0; b < 192; ++b) ASSERT_EQ(f.at(i, b), g.get(i, b) ? 1u : 0u);
  }
}

TEST(Kernels, DeterministicAcrossWorkerCounts) {
  SeededRng rng(27);
  const auto db = db::DbMatrix::random(2048, 1024, rng);
  const auto bits = random_bits(96, 2048, rng);
  const auto fq = random_field(96, 2048, 257, rng);
  const auto g1 = batch_matvec_gf2(bits, Gf2DbView::of(db), 1);
  const auto f1 = batch_matmul_field(fq, FieldDbView::of(db, 8), 257, 1);
  for (unsigned w : {2u, 3u, 4u, 7u, 16u}) {
    EXPECT_EQ(batch_matvec_gf2(bits, Gf2DbView::of(db), w), g1) << w;
    EXPECT_EQ(batch_matmul_field(fq, FieldDbView::of(db, 8), 257, w), f1) << w;
  }
}

TEST(Kernels, SliceViewsAndBackends) {
  SeededRng rng(28);
  const auto db = db::DbMatrix::random(300, 128, rng);
  const auto view = Gf2DbView::of(db).slice(100, 50);
  EXPECT_EQ(view.rows, 50u);
  EXPECT_EQ(view.row(0), Gf2DbView::of(db).row(100));
  EXPECT_EQ(error_code([&] { Gf2DbView::of(db).slice(290, 11); }), Errc::kGeometry);

  const auto bits = random_bits(9, 300, rng);
  const auto scalar = backend_select(Backend::kScalar);
  const auto parallel = backend_select(Backend::kDataParallel, 4);
  EXPECT_NE(scalar->name(), parallel->name());
  EXPECT_EQ(scalar->gf2(bits, Gf2DbView::of(db)), parallel->gf2(bits, Gf2DbView::of(db)));
  const auto fq = random_field(9, 300, 3, rng);
  EXPECT_EQ(scalar->field(fq, FieldDbView::of(db, 2), 3), parallel->field(fq, FieldDbView::of(db, 2), 3));

  EXPECT_EQ(error_code([&] { batch_matvec_gf2(random_bits(2, 299, rng), Gf2DbView::of(db), 1); }), Errc::kGeometry);
  EXPECT_EQ(error_code([&] { batch_matvec_gf2(bits, Gf2DbView::of(db), 0); }), Errc::kParameter);
  EXPECT_EQ(error_code([&] { FieldDbView::of(db, 3); }), Errc::kParameter);
}
