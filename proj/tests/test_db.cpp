#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>

#include "qpadl/crypto/hash.hpp"
#include "qpadl/db/block.hpp"
#include "qpadl/db/codec.hpp"
#include "qpadl/db/file.hpp"
#include "qpadl/pow/hct.hpp"
#include "qpadl/pow/lbp.hpp"
#include "support.hpp"

using namespace qpadl;
using namespace qpadl::db;
using qpadl::test::error_code;

namespace {

std::vector<SpectrumRecord> sorted_records(const IndexParams& dims, std::size_t count, Rng& rng) {
  const RowMajorIndex index(dims);
  std::vector<std::uint64_t> thetas;
  for (std::size_t i = 0; i < count; ++i) thetas.push_back(rng.uniform_below(dims.row_count()));
  std::sort(thetas.begin(), thetas.end());
  thetas.erase(std::unique(thetas.begin(), thetas.end()), thetas.end());
  std::vector<SpectrumRecord> out;
  for (auto theta : thetas) {
    SpectrumRecord r;
    index.decode(theta, r.coord, r.channel, r.time_window);
    r.eirp_centi_dbm = 2000 + static_cast<std::int32_t>(rng.uniform_below(200));
    r.available = rng.uniform_below(4) != 0;
    out.push_back(r);
  }
  return out;
}

// Empirical entropy, in bits, of a symbol sequence.
double empirical_bits(const std::vector<std::int64_t>& symbols) {
  std::map<std::int64_t, std::size_t> freq;
  for (auto s : symbols) ++freq[s];
  double bits = 0;
  for (const auto& [_, n] : freq) {
    bits -= static_cast<double>(n) * std::log2(static_cast<double>(n) / symbols.size());
  }
  return bits;
}

PuzzleIssuer stub_issuer(Rng& rng) { return PuzzleIssuer::generate(crypto::SignatureBackend::kStub, rng); }

}  // namespace

TEST(Record, SerializedLayout) {
  SpectrumRecord r;
  r.coord = {0x01020304, 5};
  r.channel = 6;
  r.time_window = 7;
  r.eirp_centi_dbm = -2;
  r.available = true;
  const auto b = r.serialize();
  ASSERT_EQ(b.size(), 560u);
  const Bytes head = {4, 3, 2, 1, 5, 0, 0, 0, 6, 0, 0, 0, 7, 0, 0, 0, 0xfe, 0xff, 0xff, 0xff, 1};
  EXPECT_TRUE(std::equal(head.begin(), head.end(), b.begin()));
  EXPECT_TRUE(std::all_of(b.begin() + 21, b.end(), [](auto x) { return x == 0; }));
  EXPECT_EQ(SpectrumRecord::deserialize(b), r);
  auto bad = b;
  bad[20] = 2;
  EXPECT_EQ(error_code([&] { SpectrumRecord::deserialize(bad); }), Errc::kFormat);
}

TEST(Record, ValidateNamesField) {
  RecordLimits limits;
  limits.dims = {4, 4, 2, 2};
  SpectrumRecord r;
  EXPECT_NO_THROW(validate(r, limits));
  r.channel = 2;
  EXPECT_EQ(error_code([&] { validate(r, limits); }), Errc::kDimension);
  r.channel = 0;
  r.eirp_centi_dbm = 3601;
  EXPECT_EQ(error_code([&] { validate(r, limits); }), Errc::kInput);
}

TEST(Index, RowMajorIsBijective) {
  for (const IndexParams p : {IndexParams{16, 16, 16, 16}, IndexParams{7, 3, 5, 11}, IndexParams{1, 1, 1, 1}}) {
    const RowMajorIndex index(p);
    std::vector<bool> hit(p.row_count(), false);
    for (std::uint32_t y = 0; y < p.n_rows; ++y) {
      for (std::uint32_t x = 0; x < p.n_cols; ++x) {
        for (std::uint32_t ch = 0; ch < p.n_ch; ++ch) {
          for (std::uint32_t tv = 0; tv < p.n_tv; ++tv) {
            const auto theta = index.encode({x, y}, ch, tv);
            ASSERT_LT(theta, p.row_count());
            ASSERT_FALSE(hit[theta]);
            hit[theta] = true;
            GridCoordinate c;
            std::uint32_t ch2 = 0, tv2 = 0;
            index.decode(theta, c, ch2, tv2);
            ASSERT_EQ(c, (GridCoordinate{x, y}));
            ASSERT_EQ(ch2, ch);
            ASSERT_EQ(tv2, tv);
          }
        }
      }
    }
  }
  const RowMajorIndex index({4, 4, 2, 2});
  EXPECT_EQ(index.encode({1, 2}, 1, 0), ((2u * 4 + 1) * 2 + 1) * 2 + 0);
  EXPECT_EQ(error_code([&] { index.encode({4, 0}, 0, 0); }), Errc::kDimension);
}

TEST(Build, PlacesRecordsAndPlaceholders) {
  RecordLimits limits;
  limits.dims = {4, 4, 2, 2};
  SeededRng rng(1);
  const auto records = sorted_records(limits.dims, 20, rng);
  const auto db = db_build(records, limits, 3072 * 8);
  ASSERT_EQ(db.rows(), 64u);
  const RowMajorIndex index(limits.dims);
  std::vector<bool> has(64, false);
  for (const auto& r : records) {
    const auto theta = record_index(r, limits.dims);
    has[theta] = true;
    EXPECT_EQ(DbEntryBlock::decode(db.row_bytes(theta)).record, r);
  }
  for (std::uint64_t theta = 0; theta < 64; ++theta) {
    if (has[theta]) continue;
    const auto rec = DbEntryBlock::decode(db.row_bytes(theta)).record;
    EXPECT_FALSE(rec.available);
    EXPECT_EQ(rec.eirp_centi_dbm, limits.eirp_min_centi_dbm);
    EXPECT_EQ(record_index(rec, limits.dims), theta);
  }
  auto dup = records;
  dup.push_back(records.front());
  EXPECT_EQ(error_code([&] { db_build(dup, limits, 3072 * 8); }), Errc::kInput);
}

TEST(Build, ReplicasAreBitwiseIdentical) {
  RecordLimits limits;
  limits.dims = {8, 8, 2, 2};
  SeededRng rng(2);
  const auto records = sorted_records(limits.dims, 100, rng);
  auto shuffled = records;
  std::reverse(shuffled.begin(), shuffled.end());
  const auto a = db_build(records, limits, 1024 * 8);
  const auto b = db_build(shuffled, limits, 1024 * 8);
  EXPECT_TRUE(a.same_payload(b));
  EXPECT_FALSE(a.shares_payload_with(b));
}

TEST(Bind, EmptyDifficultyListIsNoOp) {
  SeededRng rng(3);
  const auto db = DbMatrix::random(8, 3072 * 8, rng);
  const auto issuer = stub_issuer(rng);
  const auto out = puzzle_bind(db, issuer, PowKind::kHct, {}, BindOptions{}, rng);
  EXPECT_TRUE(out.same_payload(db));
}

TEST(Bind, HctPuzzleIs37Bytes) {
  RecordLimits limits;
  limits.dims = {1, 1, 1, 1};
  SeededRng rng(4);
  const auto db = db_build({}, limits, 3072 * 8);
  const auto issuer = stub_issuer(rng);
  const std::uint32_t kappa[] = {20};
  const auto bound = puzzle_bind(db, issuer, PowKind::kHct, kappa, BindOptions{}, rng);
  const auto block = DbEntryBlock::decode(bound.row_bytes(0));
  ASSERT_EQ(block.puzzles.size(), 1u);
  EXPECT_EQ(block.puzzles[0].bytes.size(), 37u);
  EXPECT_EQ(pow::HctPuzzle::deserialize(block.puzzles[0].bytes).difficulty, 20u);
}

TEST(Bind, Lbp150PuzzleIs28133Bytes) {
  RecordLimits limits;
  limits.dims = {1, 1, 1, 1};
  SeededRng rng(5);
  const auto db = db_build({}, limits, 32768 * 8);
  const auto issuer = stub_issuer(rng);
  const std::uint32_t dims[] = {150};
  const auto bound = puzzle_bind(db, issuer, PowKind::kLbp, dims, BindOptions{}, rng);
  const auto block = DbEntryBlock::decode(bound.row_bytes(0));
  ASSERT_EQ(block.puzzles.size(), 1u);
  EXPECT_EQ(block.puzzles[0].bytes.size(), 28133u);
  EXPECT_EQ(pow::LbpPuzzle::deserialize(block.puzzles[0].bytes).dimension, 150u);

  // The same puzzle does not fit a 3 KB block.
  EXPECT_EQ(error_code([&] { puzzle_bind(db_build({}, limits, 3072 * 8), issuer, PowKind::kLbp, dims, {}, rng); }),
            Errc::kCapacity);
}

TEST(Bind, EveryRowSignedAndRefreshInvalidatesOldSignatures) {
  SeededRng rng(6);
  RecordLimits limits;
  limits.dims = {4, 2, 2, 1};
  // Two puzzles and an ML-DSA signature need more than 3 KB.
  const auto base = db_build(sorted_records(limits.dims, 8, rng), limits, 4096 * 8);
  const auto issuer = PuzzleIssuer::generate(crypto::SignatureBackend::kMlDsa44, rng);
  BindOptions options;
  options.validity_window = 100;
  const std::uint32_t kappas[] = {4, 8};
  const auto bound = puzzle_bind(base, issuer, PowKind::kHct, kappas, options, rng);
  EXPECT_TRUE(DbEntryBlock::decode(base.row_bytes(0)).puzzles.empty());  // input untouched
  for (std::uint64_t theta = 0; theta < bound.rows(); ++theta) {
    const auto b = DbEntryBlock::decode(bound.row_bytes(theta));
    ASSERT_EQ(b.puzzles.size(), 2u);
    EXPECT_EQ(b.puzzles[0].difficulty, 4u);
    EXPECT_EQ(b.puzzles[1].difficulty, 8u);
    for (const auto& p : b.puzzles) EXPECT_NO_THROW(pow::HctPuzzle::deserialize(p.bytes));
    EXPECT_EQ(check_puzzles(*issuer.scheme, issuer.keys.public_key, theta, b.puzzles, b.validity_window, b.issuer_sig,
                            100),
              PuzzleCheck::kOk);
    // Moved to another row, the signature no longer verifies.
    EXPECT_EQ(check_puzzles(*issuer.scheme, issuer.keys.public_key, theta ^ 1, b.puzzles, b.validity_window,
                            b.issuer_sig, 100),
              PuzzleCheck::kBadSignature);
  }

  options.validity_window = 101;
  const auto refreshed = puzzle_bind(bound, issuer, PowKind::kHct, kappas, options, rng);
  const auto old_block = DbEntryBlock::decode(bound.row_bytes(3));
  const auto new_block = DbEntryBlock::decode(refreshed.row_bytes(3));
  EXPECT_EQ(new_block.puzzles.size(), 2u);  // replaced, not appended
  EXPECT_NE(new_block.puzzles, old_block.puzzles);
  EXPECT_EQ(new_block.record, old_block.record);
  EXPECT_EQ(check_puzzles(*issuer.scheme, issuer.keys.public_key, 3, old_block.puzzles, old_block.validity_window,
                          old_block.issuer_sig, 101),
            PuzzleCheck::kStale);
  EXPECT_EQ(check_puzzles(*issuer.scheme, issuer.keys.public_key, 3, new_block.puzzles, new_block.validity_window,
                          new_block.issuer_sig, 101),
            PuzzleCheck::kOk);
}

TEST(Bind, ValidityWindowIsHourly) {
  EXPECT_EQ(validity_window_at(0), 0u);
  EXPECT_EQ(validity_window_at(3599), 0u);
  EXPECT_EQ(validity_window_at(3600), 1u);
  EXPECT_EQ(validity_window_at(7200, 60), 120u);
  EXPECT_EQ(error_code([] { validity_window_at(1, 0); }), Errc::kParameter);
}

TEST(Block, EncodeDecodeAndCapacity) {
  DbEntryBlock b;
  b.record.coord = {3, 4};
  b.validity_window = 9;
  b.puzzles = {{PowKind::kHct, 12, Bytes(37, 0xab)}};
  b.issuer_sig = Bytes(100, 7);
  const auto enc = b.encode(1024);
  ASSERT_EQ(enc.size(), 1024u);
  EXPECT_EQ(b.encoded_size(), 560u + 8 + 1 + (1 + 4 + 4 + 37) + 2 + 100);
  EXPECT_EQ(DbEntryBlock::decode(enc), b);
  EXPECT_EQ(error_code([&] { b.encode(b.encoded_size() - 1); }), Errc::kCapacity);
  auto padded = enc;
  padded.back() = 1;
  EXPECT_EQ(error_code([&] { DbEntryBlock::decode(padded); }), Errc::kFormat);
}

TEST(Codec, EmptyListIsEmptyStream) {
  EXPECT_TRUE(compress_rows({}).empty());
  EXPECT_TRUE(decompress_rows({}).empty());
}

TEST(Codec, IdenticalRecordsGiveZeroDeltas) {
  SpectrumRecord r;
  r.coord = {5, 9};
  r.channel = 2;
  r.eirp_centi_dbm = 1234;
  r.available = true;
  const std::vector<SpectrumRecord> same(50, r);
  const auto deltas = row_deltas(same);
  for (const auto& field : deltas) {
    for (std::size_t i = 1; i < field.size(); ++i) EXPECT_EQ(field[i], 0);
  }
  const auto stream = compress_rows(same);
  EXPECT_LT(stream.size(), same.size() * SpectrumRecord::kSerializedBytes);
  EXPECT_EQ(decompress_rows(stream), same);
}

TEST(Codec, UnsortedInputIsOrderingError) {
  SpectrumRecord a, b;
  a.coord = {0, 1};
  b.coord = {0, 0};
  const std::vector<SpectrumRecord> v = {a, b};
  EXPECT_EQ(error_code([&] { compress_rows(v); }), Errc::kOrdering);
}

TEST(Codec, RoundTripOnRandomSortedSets) {
  SeededRng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const IndexParams dims{1 + static_cast<std::uint32_t>(rng.uniform_below(40)),
                           1 + static_cast<std::uint32_t>(rng.uniform_below(40)),
                           1 + static_cast<std::uint32_t>(rng.uniform_below(8)),
                           1 + static_cast<std::uint32_t>(rng.uniform_below(8))};
    auto records = sorted_records(dims, rng.uniform_below(300), rng);
    for (auto& r : records) r.eirp_centi_dbm = static_cast<std::int32_t>(rng.uniform_below(6601)) - 3000;
    EXPECT_EQ(decompress_rows(compress_rows(records)), records);
  }
}

TEST(Codec, SyntheticRatioAgainstEntropy) {
  SeededRng rng(8);
  const IndexParams dims{64, 64, 4, 4};
  std::vector<SpectrumRecord> records;
  const RowMajorIndex index(dims);
  // 2^12 rows spread evenly over a 2^16-row grid, slowly varying power.
  std::int32_t eirp = 1500;
  for (std::uint64_t theta = 0; theta < dims.row_count(); theta += 16) {
    SpectrumRecord r;
    index.decode(theta + rng.uniform_below(16), r.coord, r.channel, r.time_window);
    eirp += static_cast<std::int32_t>(rng.uniform_below(21)) - 10;
    r.eirp_centi_dbm = eirp;
    r.available = rng.uniform_below(8) != 0;
    records.push_back(r);
  }
  ASSERT_EQ(records.size(), 4096u);
  const auto stream = compress_rows(records);
  EXPECT_EQ(decompress_rows(stream), records);

  // Packed raw form: five 32-bit fields and a flag byte per record.
  const double raw_bits = records.size() * 21.0 * 8;
  const double coded_bits = stream.size() * 8.0;
  double entropy_bits = 0;
  for (const auto& field : row_deltas(records)) entropy_bits += empirical_bits(field);
  // A per-field prefix code cannot beat the empirical entropy of its symbols.
  EXPECT_GE(coded_bits, entropy_bits);
  EXPECT_LT(coded_bits, raw_bits / 2);
  // Exact size from the deltas: seven payload bits per varint byte.
  auto varint_bytes = [](std::uint64_t v) { return v < 128 ? 1.0 : 1.0 + std::floor(std::log2(double(v)) / 7); };
  double expected = varint_bytes(records.size());
  for (const auto& field : row_deltas(records)) {
    for (auto d : field) expected += varint_bytes(zigzag(d));
  }
  EXPECT_EQ(stream.size(), expected);
  std::cout << "compression ratio " << raw_bits / coded_bits << ", entropy ratio " << coded_bits / entropy_bits << "\n";
}

TEST(Codec, VarintAndZigzag) {
  for (std::int64_t v : std::initializer_list<std::int64_t>{0, 1, -1, 63, -64, std::int64_t{1} << 40, -(std::int64_t{1} << 62), INT64_MAX, INT64_MIN}) {
    EXPECT_EQ(unzigzag(zigzag(v)), v);
  }
  EXPECT_EQ(zigzag(-1), 1u);
  EXPECT_EQ(zigzag(1), 2u);
  Bytes out;
  put_varint(out, 300);
  EXPECT_EQ(out, (Bytes{0xac, 0x02}));
  ByteReader r(out);
  EXPECT_EQ(get_varint(r), 300u);
  const Bytes overlong(11, 0xff);
  ByteReader bad(overlong);
  EXPECT_EQ(error_code([&] { get_varint(bad); }), Errc::kFormat);
  EXPECT_EQ(error_code([] { decompress_rows(Bytes{0x7f, 0}); }), Errc::kFormat);
}

TEST(File, RoundTripAndHeader) {
  SeededRng rng(9);
  auto db = DbMatrix::random(10, 128, rng);
  db.scheme = PirScheme::kFtr;
  db.pow = PowKind::kLbp;
  const auto bytes = db_encode(db);
  ASSERT_EQ(bytes.size(), 4u + 2 + 4 + 4 + 1 + 1 + 10 * 16 + 32);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "QPDB");
  EXPECT_EQ(bytes[4], 1);
  EXPECT_EQ(bytes[6], 10);
  EXPECT_EQ(bytes[10], 128);
  const auto payload = ByteSpan(bytes).subspan(16, 160);
  const auto digest = crypto::sha256(payload);
  EXPECT_TRUE(std::equal(digest.begin(), digest.end(), bytes.end() - 32));
  const auto back = db_decode(bytes);
  EXPECT_TRUE(back.same_payload(db));
  EXPECT_EQ(back.scheme, PirScheme::kFtr);
  EXPECT_EQ(back.pow, PowKind::kLbp);

  const auto path = std::filesystem::temp_directory_path() / "qpadl_test_db.qpdb";
  db_save(db, path);
  EXPECT_TRUE(db_load(path).same_payload(db));
  std::filesystem::remove(path);
}

TEST(File, CorruptionIsFormatError) {
  SeededRng rng(10);
  const auto bytes = db_encode(DbMatrix::random(4, 64, rng));
  auto magic = bytes;
  magic[0] = 'X';
  auto version = bytes;
  version[4] = 2;
  auto flipped = bytes;
  flipped[20] ^= 1;
  Bytes truncated(bytes.begin(), bytes.end() - 1);
  for (const Bytes* b : {&magic, &version, &flipped, &truncated}) {
    EXPECT_EQ(error_code([&] { db_decode(*b); }), Errc::kFormat);
  }
  EXPECT_EQ(error_code([] { db_load("/nonexistent/x.qpdb"); }), Errc::kInput);
}
