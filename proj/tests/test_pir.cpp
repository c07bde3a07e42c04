#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "qpadl/crypto/hash.hpp"
#include "qpadl/kernels/kernels.hpp"
#include "qpadl/pir/ens.hpp"
#include "qpadl/pir/ftr.hpp"
#include "qpadl/pir/oop.hpp"
#include "qpadl/pir/wire.hpp"
#include "support.hpp"

using namespace qpadl;
using namespace qpadl::pir;
using qpadl::test::error_code;

namespace {

std::int64_t inv_euclid(std::int64_t a, std::int64_t p) {
  std::int64_t t = 0, nt = 1, r = p, nr = ((a % p) + p) % p;
  while (nr != 0) {
    const auto q = r / nr;
    std::tie(t, nt) = std::make_tuple(nt, t - q * nt);
    std::tie(r, nr) = std::make_tuple(nr, r - q * nr);
  }
  return (t % p + p) % p;
}

// Value at zero of the polynomial through the given points.
std::int64_t interpolate_at_zero(const std::vector<std::int64_t>& xs, const std::vector<std::int64_t>& ys,
                                 std::int64_t p) {
  std::int64_t acc = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    std::int64_t num = 1, den = 1;
    for (std::size_t j = 0; j < xs.size(); ++j) {
      if (j == i) continue;
      num = num * ((p - xs[j]) % p) % p;
      den = den * (((xs[i] - xs[j]) % p + p) % p) % p;
    }
    acc = (acc + ys[i] * num % p * inv_euclid(den, p)) % p;
  }
  return acc;
}

std::vector<FtrResponse> ftr_answers(const FtrQuery& q, const db::DbMatrix& db) {
  std::vector<FtrResponse> out;
  for (unsigned i = 0; i < q.per_server.size(); ++i) out.push_back({i, ftr_respond(q.per_server[i], db, q.modulus)});
  return out;
}

std::vector<std::optional<Bytes>> ens_answers(const EnsQuery& q, const db::DbMatrix& db) {
  std::vector<std::optional<Bytes>> out;
  for (const auto& s : q.shares) out.emplace_back(ens_respond(s, db));
  return out;
}

Bytes oop_round(OopState& st, std::uint64_t theta) {
  const auto& g = st.geometry();
  std::vector<OopHandshake> hs;
  std::vector<OopSeed> seeds;
  for (unsigned i = 0; i < g.n; ++i) {
    hs.push_back(oop_offline_handshake(st, i));
    seeds.push_back(hs.back().seed);
  }
  const auto qs = oop_query_gen(theta, seeds, g, st.prg());
  std::vector<std::optional<Bytes>> rs;
  for (unsigned i = 0; i < g.n; ++i) rs.emplace_back(oop_respond(st, i, hs[i].session, qs[i]));
  return oop_reconstruct(rs);
}

}  // namespace

TEST(Ens, ZeroFirstShareMakesLastShareTheUnitVector) {
  test::ZeroRng zero;
  const auto q = ens_query_gen(2, 4, 2, zero);
  ASSERT_EQ(q.shares.size(), 2u);
  EXPECT_EQ(q.shares[0], BitVector(4));
  EXPECT_EQ(q.shares[1], BitVector::unit(4, 2));
  EXPECT_EQ(q.shares[1].to_bytes(), Bytes{0x04});
}

TEST(Ens, SharesXorToUnitVector) {
  SeededRng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const std::uint64_t r = 1 + rng.uniform_below(200);
    const unsigned l = 2 + static_cast<unsigned>(rng.uniform_below(5));
    const std::uint64_t theta = rng.uniform_below(r);
    const auto q = ens_query_gen(theta, r, l, rng);
    BitVector acc(r);
    for (const auto& s : q.shares) acc ^= s;
    EXPECT_EQ(acc, BitVector::unit(r, theta));
  }
}

TEST(Ens, ShareMarginalIsUniform) {
  // 16 equally likely 4-bit shares; chi-square with 15 degrees of freedom,
  // 0.999 quantile 37.70.
  SeededRng rng(12);
  for (unsigned l = 2; l <= 5; ++l) {
    std::vector<std::vector<int>> counts(l, std::vector<int>(16, 0));
    const int samples = 4000;
    for (int s = 0; s < samples; ++s) {
      const auto q = ens_query_gen(rng.uniform_below(4), 4, l, rng);
      for (unsigned i = 0; i < l; ++i) ++counts[i][q.shares[i].words()[0]];
    }
    for (unsigned i = 0; i < l; ++i) {
      double chi = 0;
      for (int v = 0; v < 16; ++v) {
        const double e = samples / 16.0;
        chi += (counts[i][v] - e) * (counts[i][v] - e) / e;
      }
      EXPECT_LT(chi, 37.70) << "server " << i << " of " << l;
    }
  }
}

TEST(Ens, SingleServerViewIndependentOfTarget) {
  // Enumerate every coin sequence for r = 4, l = 2.
  std::map<std::uint64_t, std::map<unsigned, std::map<std::uint64_t, int>>> views;
  for (std::uint64_t theta = 0; theta < 4; ++theta) {
    for (unsigned coins = 0; coins < 16; ++coins) {
      test::ScriptedRng rng(Bytes{static_cast<std::uint8_t>(coins), 0, 0, 0, 0, 0, 0, 0});
      const auto q = ens_query_gen(theta, 4, 2, rng);
      for (unsigned i = 0; i < 2; ++i) ++views[theta][i][q.shares[i].words()[0]];
    }
  }
  for (unsigned i = 0; i < 2; ++i) {
    for (std::uint64_t theta = 0; theta < 4; ++theta) {
      EXPECT_EQ(views[theta][i], views[0][i]);
      EXPECT_EQ(views[theta][i].size(), 16u);
    }
  }
}

TEST(Ens, RespondMatchesFoldOracle) {
  SeededRng rng(13);
  const auto db = db::DbMatrix::random(8, 64, rng);
  EXPECT_EQ(ens_respond(BitVector(8), db), Bytes(8, 0));
  for (std::uint64_t j = 0; j < 8; ++j) EXPECT_EQ(ens_respond(BitVector::unit(8, j), db), test::row_of(db, j));
  for (int trial = 0; trial < 50; ++trial) {
    const auto share = BitVector::random(8, rng);
    EXPECT_EQ(ens_respond(share, db), test::naive_fold(db, [&](std::uint64_t j) { return share.get(j); }));
  }
}

TEST(Ens, BatchPathAgreesWithSingle) {
  SeededRng rng(14);
  const auto db = db::DbMatrix::random(300, 512, rng);
  std::vector<BitVector> shares;
  for (int i = 0; i < 9; ++i) shares.push_back(BitVector::random(300, rng));
  for (auto backend : {kernels::Backend::kScalar, kernels::Backend::kDataParallel}) {
    const auto out = ens_respond_batch(shares, db, *kernels::backend_select(backend, 3));
    for (std::size_t i = 0; i < shares.size(); ++i) EXPECT_EQ(out[i], ens_respond(shares[i], db));
  }
}

TEST(Ens, Errors) {
  SeededRng rng(15);
  const auto db = db::DbMatrix::random(8, 64, rng);
  EXPECT_EQ(error_code([&] { ens_query_gen(0, 8, 1, rng); }), Errc::kParameter);
  EXPECT_EQ(error_code([&] { ens_respond(BitVector(7), db); }), Errc::kGeometry);
  auto answers = ens_answers(ens_query_gen(3, 8, 3, rng), db);
  EXPECT_EQ(ens_reconstruct(answers), test::row_of(db, 3));
  answers[1].reset();
  EXPECT_EQ(error_code([&] { ens_reconstruct(answers); }), Errc::kIncomplete);
}

TEST(Ftr, WordWidth) {
  EXPECT_EQ(ftr_word_bits(65537), 8u);
  EXPECT_EQ(ftr_word_bits(257), 8u);
  EXPECT_EQ(ftr_word_bits(251), 4u);
  EXPECT_EQ(ftr_word_bits(31), 4u);
  EXPECT_EQ(ftr_word_bits(7), 2u);
  EXPECT_EQ(ftr_word_bits(3), 1u);
}

TEST(Ftr, DegreeZeroSendsUnitVector) {
  SeededRng rng(21);
  const auto q = ftr_query_gen(5, 9, 4, 0, kDefaultFtrModulus, rng);
  for (const auto& v : q.per_server) {
    for (std::size_t j = 0; j < 9; ++j) EXPECT_EQ(v[j], j == 5 ? 1u : 0u);
  }
}

TEST(Ftr, EverySubsetOfTPlusOneInterpolatesToUnitVector) {
  SeededRng rng(22);
  const std::int64_t p = kDefaultFtrModulus;
  const auto q = ftr_query_gen(3, 10, 5, 2, kDefaultFtrModulus, rng);
  for (unsigned a = 0; a < 5; ++a) {
    for (unsigned b = a + 1; b < 5; ++b) {
      for (unsigned c = b + 1; c < 5; ++c) {
        for (std::size_t j = 0; j < 10; ++j) {
          const std::vector<std::int64_t> xs{a + 1, b + 1, c + 1};
          const std::vector<std::int64_t> ys{q.per_server[a][j], q.per_server[b][j], q.per_server[c][j]};
          EXPECT_EQ(interpolate_at_zero(xs, ys, p), j == 3 ? 1 : 0);
        }
      }
    }
  }
}

TEST(Ftr, ReconstructsWithoutCorruption) {
  SeededRng rng(23);
  const auto db = db::DbMatrix::random(20, 256, rng);
  const auto q = ftr_query_gen(7, 20, 3, 1, kDefaultFtrModulus, rng);
  FtrDecodeReport report;
  EXPECT_EQ(ftr_reconstruct(ftr_answers(q, db), 1, kDefaultFtrModulus, std::nullopt, &report), test::row_of(db, 7));
  EXPECT_EQ(report.corrected_words, 0u);
}

TEST(Ftr, CorrectsOneCorruptedServer) {
  SeededRng rng(24);
  const auto db = db::DbMatrix::random(16, 128, rng);
  const auto q = ftr_query_gen(9, 16, 5, 1, kDefaultFtrModulus, rng);
  auto answers = ftr_answers(q, db);
  for (auto& v : answers[2].values) v = static_cast<std::uint32_t>(rng.uniform_below(kDefaultFtrModulus));
  FtrDecodeReport report;
  EXPECT_EQ(ftr_reconstruct(answers, 1, kDefaultFtrModulus, std::nullopt, &report), test::row_of(db, 9));
  EXPECT_EQ(report.suspected, std::vector<unsigned>{2});
}

TEST(Ftr, TooFewResponses) {
  SeededRng rng(25);
  const auto db = db::DbMatrix::random(4, 64, rng);
  const auto q = ftr_query_gen(1, 4, 4, 2, kDefaultFtrModulus, rng);
  auto answers = ftr_answers(q, db);
  answers.resize(2);
  EXPECT_EQ(error_code([&] { ftr_reconstruct(answers, 2, kDefaultFtrModulus); }), Errc::kIncomplete);
  answers = ftr_answers(q, db);
  answers.resize(3);
  EXPECT_EQ(ftr_reconstruct(answers, 2, kDefaultFtrModulus), test::row_of(db, 1));
}

TEST(Ftr, BeyondRadiusIsRobustnessError) {
  SeededRng rng(26);
  const auto db = db::DbMatrix::random(4, 64, rng);
  const auto q = ftr_query_gen(0, 4, 3, 1, kDefaultFtrModulus, rng);
  auto answers = ftr_answers(q, db);
  answers[0].values[0] = (answers[0].values[0] + 1) % kDefaultFtrModulus;
  EXPECT_EQ(error_code([&] { ftr_reconstruct(answers, 1, kDefaultFtrModulus); }), Errc::kRobustness);
}

TEST(Ftr, ParameterErrors) {
  SeededRng rng(27);
  EXPECT_EQ(error_code([&] { ftr_query_gen(0, 4, 3, 3, kDefaultFtrModulus, rng); }), Errc::kParameter);
  EXPECT_EQ(error_code([&] { ftr_query_gen(0, 4, 3, 1, 65536, rng); }), Errc::kParameter);
  EXPECT_EQ(error_code([&] { ftr_query_gen(0, 4, 7, 1, 7, rng); }), Errc::kParameter);
}

TEST(Ftr, SingleServerViewUniformOverSmallField) {
  // p = 7, r = 2, t = 1: each server sees (f_0(a), f_1(a)); over all 49 coin
  // choices this must hit every pair exactly once, for every target.
  for (std::uint64_t theta = 0; theta < 2; ++theta) {
    for (unsigned server = 0; server < 3; ++server) {
      std::map<std::pair<std::uint32_t, std::uint32_t>, int> seen;
      for (std::uint64_t c0 = 0; c0 < 7; ++c0) {
        for (std::uint64_t c1 = 0; c1 < 7; ++c1) {
          // uniform_below(7) on a scripted stream: feed the value directly.
          class Fixed final : public Rng {
           public:
            Fixed(std::uint64_t a, std::uint64_t b) : v_{a, b} {}
            void fill(std::span<std::uint8_t>) override { throw std::logic_error("unused"); }
            std::uint64_t uniform_below(std::uint64_t) override { return v_[i_++]; }

           private:
            std::uint64_t v_[2];
            int i_ = 0;
          } rng(c0, c1);
          const auto q = ftr_query_gen(theta, 2, 3, 1, 7, rng);
          ++seen[{q.per_server[server][0], q.per_server[server][1]}];
        }
      }
      EXPECT_EQ(seen.size(), 49u);
    }
  }
}

TEST(Ftr, ExhaustiveCorruptionWithinRadius) {
  SeededRng rng(28);
  const auto db = db::DbMatrix::random(6, 64, rng);
  for (unsigned l = 1; l <= 7; ++l) {
    for (unsigned t = 0; t < l; ++t) {
      const auto q = ftr_query_gen(4, 6, l, t, kDefaultFtrModulus, rng);
      const auto honest = ftr_answers(q, db);
      for (unsigned k = t + 1; k <= l; ++k) {
        const unsigned radius = ftr_unique_radius(k, t);
        for (unsigned nu = 0; nu <= radius; ++nu) {
          for (unsigned mask = 0; mask < (1u << k); ++mask) {
            if (static_cast<unsigned>(std::popcount(mask)) != nu) continue;
            std::vector<FtrResponse> answers(honest.begin(), honest.begin() + k);
            for (unsigned i = 0; i < k; ++i) {
              if (!((mask >> i) & 1)) continue;
              for (auto& v : answers[i].values) {
                v = (v + 1 + static_cast<std::uint32_t>(rng.uniform_below(kDefaultFtrModulus - 1))) % kDefaultFtrModulus;
              }
            }
            EXPECT_EQ(ftr_reconstruct(answers, t, kDefaultFtrModulus), test::row_of(db, 4))
                << "l=" << l << " t=" << t << " k=" << k << " mask=" << mask;
          }
        }
      }
    }
  }
}

TEST(Ftr, BatchPathAgreesWithSingle) {
  SeededRng rng(29);
  const auto db = db::DbMatrix::random(200, 1024, rng);
  const auto q = ftr_query_gen(17, 200, 4, 2, kDefaultFtrModulus, rng);
  const auto batch = ftr_respond_batch(q.per_server, db, kDefaultFtrModulus,
                                       *kernels::backend_select(kernels::Backend::kDataParallel, 4));
  for (unsigned i = 0; i < 4; ++i) EXPECT_EQ(batch[i], ftr_respond(q.per_server[i], db, kDefaultFtrModulus));
}

TEST(Oop, ZeroPrgDegeneratesToPlainSelection) {
  SeededRng rng(31);
  const auto db = db::DbMatrix::random(64, 128, rng);
  auto st = oop_preprocess(db, 4, 0, 2, rng, oop_prg_zero);
  std::vector<OopSeed> seeds(4);
  const auto qs = oop_query_gen(37, seeds, st.geometry(), oop_prg_zero);
  for (unsigned i = 0; i < 4; ++i) EXPECT_EQ(qs[i], i == 2 ? BitVector::unit(16, 5) : BitVector(16));
  for (unsigned i = 0; i < 4; ++i) {
    const auto h = oop_offline_handshake(st, i);
    // With a zero mask the precomputed aggregate is zero, so the answer is
    // the plain chunk selection.
    EXPECT_EQ(oop_respond(st, i, h.session, qs[i]), i == 2 ? test::row_of(db, 37) : Bytes(16, 0));
  }
}

TEST(Oop, RecoversRows) {
  SeededRng rng(32);
  const auto db = db::DbMatrix::random(64, 256, rng);
  auto st = oop_preprocess(db, 4, 4, 64, rng);
  for (std::uint64_t theta = 0; theta < 64; ++theta) EXPECT_EQ(oop_round(st, theta), test::row_of(db, theta));
}

TEST(Oop, PartialReplicationAndUnevenChunks) {
  SeededRng rng(33);
  const auto db = db::DbMatrix::random(37, 64, rng);
  for (unsigned n = 1; n <= 6; ++n) {
    for (unsigned t = 1; t <= n; ++t) {
      auto st = oop_preprocess(db, n, t, 8, rng);
      for (int i = 0; i < 8; ++i) {
        const auto theta = rng.uniform_below(37);
        EXPECT_EQ(oop_round(st, theta), test::row_of(db, theta)) << n << " " << t;
      }
    }
  }
}

TEST(Oop, ChunkOrderDoesNotMatter) {
  SeededRng rng(34);
  const auto db = db::DbMatrix::random(96, 128, rng);
  for (int trial = 0; trial < 10; ++trial) {
    auto g = OopGeometry::cyclic(96, 6, 4);
    for (auto& list : g.mask_chunks) {
      for (std::size_t i = list.size(); i > 1; --i) std::swap(list[i - 1], list[rng.uniform_below(i)]);
    }
    auto st = oop_preprocess(db, g, 4, rng);
    for (int i = 0; i < 4; ++i) {
      const auto theta = rng.uniform_below(96);
      EXPECT_EQ(oop_round(st, theta), test::row_of(db, theta));
    }
  }
}

TEST(Oop, MatchesEns) {
  SeededRng rng(35);
  const auto db = db::DbMatrix::random(128, 512, rng);
  auto st = oop_preprocess(db, 4, 0, 20, rng);
  for (int i = 0; i < 20; ++i) {
    const auto theta = rng.uniform_below(128);
    EXPECT_EQ(oop_round(st, theta), ens_reconstruct(ens_answers(ens_query_gen(theta, 128, 3, rng), db)));
  }
}

TEST(Oop, QueueEntriesAreSingleUse) {
  SeededRng rng(36);
  const auto db = db::DbMatrix::random(16, 64, rng);
  auto st = oop_preprocess(db, 2, 0, 1, rng);
  const auto h = oop_offline_handshake(st, 0);
  EXPECT_EQ(st.queue_size(0), 0u);
  EXPECT_EQ(error_code([&] { oop_offline_handshake(st, 0); }), Errc::kBackpressure);
  oop_respond(st, 0, h.session, BitVector(8));
  EXPECT_EQ(error_code([&] { oop_respond(st, 0, h.session, BitVector(8)); }), Errc::kReplay);
  const auto h1 = oop_offline_handshake(st, 1);
  EXPECT_EQ(error_code([&] { oop_respond(st, 0, h1.session, BitVector(8)); }), Errc::kProtocol);
  st.refill(0, 1, rng);
  EXPECT_NO_THROW(oop_offline_handshake(st, 0));
}

TEST(Oop, OnlineWorkIsOneChunk) {
  SeededRng rng(37);
  const auto db = db::DbMatrix::random(256, 64, rng);
  auto st = oop_preprocess(db, 8, 0, 1, rng);
  oop_round(st, 100);
  // Eight servers each read their own 32-row chunk: one pass over the rows.
  EXPECT_EQ(st.online_rows(), 256u);
}

TEST(Oop, PrgIsDeterministicAndSeedSensitive) {
  OopSeed a{}, b{};
  b[0] = 1;
  EXPECT_EQ(oop_prg_shake(a, 10000), oop_prg_shake(a, 10000));
  EXPECT_NE(oop_prg_shake(a, 10000), oop_prg_shake(b, 10000));
  // The first output bytes are SHAKE256(seed || 0u32).
  Bytes in(a.begin(), a.end());
  in.insert(in.end(), 4, 0);
  EXPECT_EQ(oop_prg_shake(a, 64).to_bytes(), crypto::shake256(in, 8));
}

TEST(Wire, RoundTrips) {
  PirMessage m{PirScheme::kFtr, 3, encode_field_elements(std::vector<std::uint32_t>{1, 65536, 7})};
  const auto bytes = m.encode();
  EXPECT_EQ(bytes.size(), 6u + 12u);
  EXPECT_EQ(bytes[0], 2);
  EXPECT_EQ(bytes[1], 3);
  EXPECT_EQ(PirMessage::decode(bytes), m);
  EXPECT_EQ(decode_field_elements(m.payload), (std::vector<std::uint32_t>{1, 65536, 7}));
  SeededRng rng(41);
  const auto v = BitVector::random(77, rng);
  EXPECT_EQ(decode_bits(encode_bits(v), 77), v);
  const auto [session, q] = decode_oop_query(encode_oop_query(99, v), 77);
  EXPECT_EQ(session, 99u);
  EXPECT_EQ(q, v);
  auto bad = encode_bits(v);
  bad.back() |= 0x80;
  EXPECT_EQ(error_code([&] { decode_bits(bad, 77); }), Errc::kFormat);
  EXPECT_EQ(error_code([&] { PirMessage::decode(Bytes{9, 0, 0, 0, 0, 0}); }), Errc::kFormat);
}
