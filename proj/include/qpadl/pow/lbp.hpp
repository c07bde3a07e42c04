#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <vector>

#include "qpadl/common/bytes.hpp"
#include "qpadl/common/rng.hpp"
#include "qpadl/pow/lattice.hpp"

namespace qpadl::pow {

// Lattice puzzle (alpha, n, B, p). The basis is kept implicit: rows
// b_1 = (p, 0, ..., 0) and b_j = x_j e_1 + e_j, so Lambda(B) is the set of
// integer vectors v with v_1 = sum_{j>=2} x_j v_j (mod p) and det = p.
struct LbpPuzzle {
  std::uint32_t dimension = 0;  // n
  mpz_class p;
  std::vector<mpz_class> x;     // x_2..x_n, size n-1
  float alpha = 0;              // wire copy of the approximation factor

  // Field width used on the wire: every integer occupies 10n bits.
  std::uint32_t field_bits() const { return 10 * dimension; }
  std::size_t serialized_size() const;

  lattice::Basis basis() const;
  Bytes serialize() const;
  static LbpPuzzle deserialize(ByteSpan data);
};

struct LbpSolution {
  lattice::Row v;   // lattice vector
  lattice::Row nu;  // coefficients with v = B nu

  // v only; nu is recovered against the puzzle on decode.
  Bytes serialize(const LbpPuzzle& puzzle) const;
  static LbpSolution deserialize(const LbpPuzzle& puzzle, ByteSpan data);
};

struct LbpGenOptions {
  std::uint32_t prime_bits = 0;  // 0 selects 10n
  // Resample until the instance has a vector within the bound. Issuer-side
  // effort; at low dimension many random instances have none.
  bool ensure_solvable = true;
  std::uint32_t max_resamples = 64;
};

struct LbpSolveOptions {
  int bkz_block = -1;  // -1 picks by dimension, 0 disables
  std::uint64_t node_budget = 1ull << 31;
};

struct LbpSolveStats {
  std::uint64_t enumeration_nodes = 0;
  bool found_by_reduction = false;
};

// 1.05 * Gamma(n/2 + 1)^(1/n) / sqrt(pi).
double lbp_alpha(std::uint32_t n);

// floor((alpha * p^(1/n))^2 * 2^128), computed with downward rounding.
mpz_class lbp_bound_sq_scaled(std::uint32_t n, const mpz_class& p);
inline constexpr unsigned kLbpBoundFractionBits = 128;

// Exact test ||v||^2 <= (alpha p^(1/n))^2 against the scaled bound.
bool lbp_within_bound(const lattice::Row& v, const mpz_class& bound_sq_scaled);

LbpPuzzle lbp_gen(std::uint32_t dimension, Rng& rng, const LbpGenOptions& options = {},
                  std::uint32_t* resamples = nullptr);

// Reduction, then bounded enumeration when the reduced basis misses the
// bound. Throws Errc::kSolverExhausted when the search space is exhausted or
// the node budget runs out.
LbpSolution lbp_solve(const LbpPuzzle& puzzle, const LbpSolveOptions& options = {},
                      LbpSolveStats* stats = nullptr);

bool lbp_verify(const LbpPuzzle& puzzle, const LbpSolution& solution);

// Coefficients of a lattice vector in the puzzle basis; nullopt when v is
// not in the lattice.
std::optional<lattice::Row> lbp_coefficients(const LbpPuzzle& puzzle, const lattice::Row& v);

}  // namespace qpadl::pow
