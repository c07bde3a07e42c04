#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "qpadl/crypto/hash.hpp"
#include "qpadl/pow/hct.hpp"
#include "qpadl/pow/lattice.hpp"
#include "qpadl/pow/lbp.hpp"
#include "support.hpp"

using namespace qpadl;
using namespace qpadl::pow;
using qpadl::test::error_code;

namespace {

unsigned leading_zeros(const Digest& d) {
  unsigned n = 0;
  for (auto byte : d) {
    if (byte == 0) {
      n += 8;
      continue;
    }
    for (int bit = 7; bit >= 0 && ((byte >> bit) & 1) == 0; --bit) ++n;
    break;
  }
  return n;
}

// SHA-256(n_s || i || left || right || nonce), integers little-endian.
Digest node_digest(const HctPuzzle& p, std::uint32_t i, const Digest& left, const Digest& right, std::uint64_t nonce) {
  ByteWriter w;
  w.raw(p.nonce_seed);
  w.u32(i);
  w.raw(left);
  w.raw(right);
  w.u64(nonce);
  return crypto::sha256(w.bytes());
}

HctPuzzle make_hct(std::uint32_t kappa, std::uint32_t leaves, std::uint64_t seed) {
  SeededRng rng(seed);
  return hct_gen(256, kappa, leaves, rng);
}

mpz_class centered_mod(const mpz_class& a, const mpz_class& p) {
  mpz_class r = a % p;
  if (r < 0) r += p;
  if (2 * r > p) r -= p;
  return r;
}

}  // namespace

TEST(Hct, SerializesTo37Bytes) {
  const auto p = make_hct(20, 8, 1);
  const auto b = p.serialize();
  ASSERT_EQ(b.size(), 37u);
  EXPECT_TRUE(std::equal(p.nonce_seed.begin(), p.nonce_seed.end(), b.begin()));
  EXPECT_EQ(b[32], 20);
  EXPECT_EQ(b[36], 8);
  EXPECT_EQ(HctPuzzle::deserialize(b), p);
  EXPECT_EQ(error_code([&] { HctPuzzle::deserialize(ByteSpan(b).first(36)); }), Errc::kFormat);
}

TEST(Hct, GenRejectsBadParameters) {
  SeededRng rng(2);
  EXPECT_EQ(error_code([&] { hct_gen(128, 4, 2, rng); }), Errc::kParameter);
  EXPECT_EQ(error_code([&] { hct_gen(256, 4, 3, rng); }), Errc::kParameter);
  EXPECT_EQ(error_code([&] { hct_gen(256, 4, 1, rng); }), Errc::kParameter);
}

TEST(Hct, ZeroDifficultyAcceptsFirstNonce) {
  const auto p = make_hct(0, 4, 3);
  const auto sol = hct_solve(p);
  for (std::uint32_t i = 1; i <= p.node_count(); ++i) {
    EXPECT_EQ(sol.nonces[i], 0u);
    EXPECT_EQ(sol.attempts[i], 1u);
  }
}

TEST(Hct, NoncesAreMinimalUnderCounterSearch) {
  const auto p = make_hct(4, 2, 4);
  const auto sol = hct_solve(p);
  const Digest zero{};
  std::array<Digest, 4> digest{};
  // Children first: leaves 3 and 2, then the root.
  for (std::uint32_t i : {3u, 2u, 1u}) {
    const Digest& left = i == 1 ? digest[2] : zero;
    const Digest& right = i == 1 ? digest[3] : zero;
    std::uint64_t nonce = 0;
    while (leading_zeros(node_digest(p, i, left, right, nonce)) < 4) ++nonce;
    EXPECT_EQ(sol.nonces[i], nonce) << "node " << i;
    EXPECT_EQ(sol.attempts[i], nonce + 1);
    digest[i] = node_digest(p, i, left, right, nonce);
    EXPECT_EQ(sol.digests[i], digest[i]);
  }
}

TEST(Hct, VerifyAcceptsEveryLeafWithLogarithmicHashes) {
  for (std::uint32_t leaves : {2u, 4u, 8u, 32u}) {
    const auto p = make_hct(6, leaves, leaves);
    const auto sol = hct_solve(p);
    const auto depth = static_cast<std::uint64_t>(std::ceil(std::log2(leaves)));
    for (std::uint32_t leaf = 0; leaf < leaves; ++leaf) {
      const auto v = hct_verify_path(p, sol.root_nonce(), hct_open(p, sol, leaf));
      EXPECT_TRUE(v.accepted);
      EXPECT_EQ(v.hash_calls, depth + 1);
    }
    SeededRng rng(leaves);
    auto provider = [&](std::uint32_t leaf) { return hct_open(p, sol, leaf); };
    EXPECT_TRUE(hct_verify(p, sol.root_nonce(), provider, rng).accepted);
  }
}

TEST(Hct, TamperedInternalNonceRejectedAtThatNode) {
  const auto p = make_hct(8, 8, 5);
  const auto sol = hct_solve(p);
  auto path = hct_open(p, sol, 5);  // leaf node 13, then 6, 3, 1
  ASSERT_EQ(path.nodes[1].index, 6u);
  path.nodes[1].nonce ^= 1;
  const auto v = hct_verify_path(p, sol.root_nonce(), path);
  EXPECT_FALSE(v.accepted);
  // The altered node either misses the difficulty itself or changes the digest its parent binds.
  ASSERT_TRUE(v.failed_node.has_value());
  EXPECT_TRUE(*v.failed_node == 6u || *v.failed_node == 3u || *v.failed_node == 1u);

  auto wrong_root = hct_open(p, sol, 0);
  EXPECT_FALSE(hct_verify_path(p, sol.root_nonce() + 1, wrong_root).accepted);
}

TEST(Hct, PathFromAnotherPuzzleRejected) {
  const auto a = make_hct(8, 4, 6);
  const auto b = make_hct(8, 4, 7);
  const auto sol = hct_solve(a);
  for (std::uint32_t leaf = 0; leaf < 4; ++leaf) {
    EXPECT_FALSE(hct_verify_path(b, sol.root_nonce(), hct_open(a, sol, leaf)).accepted);
  }
}

TEST(Hct, NonInteractiveProofBindsContext) {
  const auto p = make_hct(8, 16, 8);
  const auto sol = hct_solve(p);
  const Bytes ctx = {1, 2, 3};
  const auto proof = hct_prove(p, sol, ctx);
  EXPECT_EQ(proof.path.leaf, hct_challenge_leaf(p, sol.root_nonce(), ctx));
  const auto back = HctProof::deserialize(proof.serialize());
  EXPECT_TRUE(hct_verify_noninteractive(p, back, ctx).accepted);
  // Another context almost always challenges another leaf.
  int rejected = 0;
  for (std::uint8_t c = 0; c < 16; ++c) {
    const Bytes other = {c, 9};
    if (hct_challenge_leaf(p, sol.root_nonce(), other) != proof.path.leaf) {
      ++rejected;
      EXPECT_FALSE(hct_verify_noninteractive(p, proof, other).accepted);
    }
  }
  EXPECT_GT(rejected, 8);
}

TEST(Hct, LeafAttemptsFollowGeometricMean) {
  // Mean of 2^kappa per node; with 40 trials of 4 leaves the sample mean of
  // 160 geometric draws lies within 30% of 2^10 well beyond 3 sigma.
  SeededRng rng(9);
  double total = 0;
  for (int t = 0; t < 40; ++t) {
    const auto p = hct_gen(256, 10, 4, rng);
    HctSolveOptions opts;
    opts.counter_start = std::nullopt;
    opts.rng = &rng;
    total += hct_solve(p, opts).mean_leaf_attempts(4);
  }
  const double mean = total / 40;
  EXPECT_GT(mean, 1024 * 0.7);
  EXPECT_LT(mean, 1024 * 1.3);
}

TEST(Hct, WorkScalesFourfoldPerTwoBits) {
  SeededRng rng(10);
  auto median_work = [&](std::uint32_t kappa) {
    std::vector<std::uint64_t> work;
    for (int t = 0; t < 30; ++t) {
      const auto p = hct_gen(256, kappa, 2, rng);
      HctSolveOptions opts;
      opts.counter_start = std::nullopt;
      opts.rng = &rng;
      const auto before = hct_hash_invocations();
      hct_solve(p, opts);
      work.push_back(hct_hash_invocations() - before);
    }
    std::nth_element(work.begin(), work.begin() + 15, work.end());
    return static_cast<double>(work[15]);
  };
  const double ratio = median_work(10) / median_work(8);
  EXPECT_GE(ratio, 2.5);
  EXPECT_LE(ratio, 6.0);
}

TEST(Hct, RandomPuzzlesAlwaysVerify) {
  SeededRng rng(11);
  for (int t = 0; t < 200; ++t) {
    const auto kappa = static_cast<std::uint32_t>(rng.uniform_below(11));
    const auto leaves = 2u << rng.uniform_below(4);
    const auto p = hct_gen(256, kappa, leaves, rng);
    const auto sol = hct_solve(p);
    const Bytes ctx = rng.bytes(8);
    ASSERT_TRUE(hct_verify_noninteractive(p, hct_prove(p, sol, ctx), ctx).accepted) << "trial " << t;
  }
}

TEST(Lbp, AlphaMatchesGammaFormula) {
  for (std::uint32_t n : {2u, 5u, 10u, 40u, 150u}) {
    const double expected = 1.05 * std::exp(std::lgamma(n / 2.0 + 1) / n) / std::sqrt(std::numbers::pi);
    EXPECT_NEAR(lbp_alpha(n), expected, 1e-9) << n;
  }
}

TEST(Lbp, PuzzleLayoutAndSize) {
  SeededRng rng(12);
  LbpGenOptions opts;
  opts.ensure_solvable = false;
  const auto p = lbp_gen(150, rng, opts);
  EXPECT_EQ(p.serialize().size(), 28133u);
  EXPECT_EQ(mpz_sizeinbase(p.p.get_mpz_t(), 2), 1500u);
  EXPECT_NE(mpz_probab_prime_p(p.p.get_mpz_t(), 30), 0);
  const auto b = p.basis();
  EXPECT_EQ(b[0][0], p.p);
  for (std::uint32_t j = 1; j < 150; ++j) {
    EXPECT_EQ(b[j][0], p.x[j - 1]);
    EXPECT_EQ(b[j][j], 1);
    EXPECT_LT(p.x[j - 1], p.p);
  }
  const auto back = LbpPuzzle::deserialize(p.serialize());
  EXPECT_EQ(back.p, p.p);
  EXPECT_EQ(back.x, p.x);

  auto bad = p.serialize();
  bad.pop_back();
  EXPECT_EQ(error_code([&] { LbpPuzzle::deserialize(bad); }), Errc::kFormat);
}

TEST(Lbp, SolverWithinBoundAgainstExhaustiveOracle) {
  SeededRng rng(13);
  LbpGenOptions opts;
  opts.prime_bits = 20;  // keeps the exhaustive box small
  for (int trial = 0; trial < 5; ++trial) {
    const auto p = lbp_gen(5, rng, opts);
    const double bound = lbp_alpha(5) * std::pow(p.p.get_d(), 1.0 / 5);
    // Every v has v_1 = sum x_j v_j (mod p); short vectors use the centred
    // residue. Search |v_j| <= bound for j >= 2.
    const long limit = static_cast<long>(std::floor(bound));
    mpz_class best = p.p * p.p;
    for (long a = -limit; a <= limit; ++a) {
      for (long b = -limit; b <= limit; ++b) {
        for (long c = -limit; c <= limit; ++c) {
          for (long d = -limit; d <= limit; ++d) {
            if (a == 0 && b == 0 && c == 0 && d == 0) continue;
            const mpz_class head = centered_mod(p.x[0] * a + p.x[1] * b + p.x[2] * c + p.x[3] * d, p.p);
            const mpz_class norm = head * head + a * a + b * b + c * c + d * d;
            if (norm < best) best = norm;
          }
        }
      }
    }
    EXPECT_EQ(lattice::squared_norm(lattice::shortest_vector(p.basis())), best);
    const auto sol = lbp_solve(p);
    EXPECT_TRUE(lbp_verify(p, sol));
    const auto norm = lattice::squared_norm(sol.v);
    EXPECT_GE(norm, best);
    EXPECT_LE(norm.get_d(), bound * bound * (1 + 1e-12));
  }
}

TEST(Lbp, TamperingRejected) {
  SeededRng rng(14);
  const auto p = lbp_gen(12, rng);
  const auto sol = lbp_solve(p);
  ASSERT_TRUE(lbp_verify(p, sol));

  auto scaled = sol;
  for (auto& e : scaled.nu) e *= 2;
  for (auto& e : scaled.v) e *= 2;
  const double bound = lbp_alpha(12) * std::pow(p.p.get_d(), 1.0 / 12);
  const bool fits = 4 * lattice::squared_norm(sol.v).get_d() <= bound * bound;
  EXPECT_EQ(lbp_verify(p, scaled), fits);

  auto perturbed = sol;
  perturbed.v[3] += 1;
  EXPECT_FALSE(lbp_verify(p, perturbed));

  auto coeff_only = sol;
  coeff_only.nu[0] += 1;
  EXPECT_FALSE(lbp_verify(p, coeff_only));

  LbpSolution zero;
  zero.v.assign(12, 0);
  zero.nu.assign(12, 0);
  EXPECT_FALSE(lbp_verify(p, zero));

  const auto back = LbpSolution::deserialize(p, sol.serialize(p));
  EXPECT_EQ(back.v, sol.v);
  EXPECT_TRUE(lbp_verify(p, back));
}

TEST(Lbp, RandomPuzzlesAlwaysVerify) {
  SeededRng rng(15);
  for (int t = 0; t < 200; ++t) {
    const auto n = 2 + static_cast<std::uint32_t>(rng.uniform_below(29));  // n up to 40 is covered by acceptance
    const auto p = lbp_gen(n, rng);
    const auto sol = lbp_solve(p);
    ASSERT_TRUE(lbp_verify(p, sol)) << "dimension " << n;
    ASSERT_FALSE(std::all_of(sol.v.begin(), sol.v.end(), [](const mpz_class& e) { return e == 0; }));
  }
}

TEST(Lattice, LllShortensAndPreservesLattice) {
  SeededRng rng(16);
  LbpGenOptions opts;
  opts.ensure_solvable = false;
  const auto p = lbp_gen(20, rng, opts);
  auto basis = p.basis();
  lattice::lll(basis);
  ASSERT_EQ(basis.size(), 20u);
  EXPECT_LT(lattice::squared_norm(basis[0]), p.p * p.p);
  for (const auto& row : basis) EXPECT_TRUE(lbp_coefficients(p, row).has_value());
  const auto gso = lattice::gram_schmidt(basis);
  for (std::size_t i = 1; i < basis.size(); ++i) {
    // (delta, eta)-reduced with delta 0.99 and eta 0.51, the floating-point relaxation of size reduction.
    EXPECT_GE(gso.r[i], (0.99L - gso.mu[i][i - 1] * gso.mu[i][i - 1]) * gso.r[i - 1] * (1 - 1e-9L));
    for (std::size_t j = 0; j < i; ++j) EXPECT_LE(std::fabs(gso.mu[i][j]), 0.51L + 1e-9L);
  }
}
