#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace qpadl::pow::lattice {

using Row = std::vector<mpz_class>;
using Basis = std::vector<Row>;  // one basis vector per row

struct LllStats {
  std::uint64_t swaps = 0;
  std::uint64_t reductions = 0;
};

// Floating-point LLL on an exact integer basis. Gram-Schmidt data is derived
// from an exact Gram matrix in extended precision. Linearly dependent input
// rows collapse to zero and are removed.
void lll(Basis& basis, double delta = 0.99, LllStats* stats = nullptr);

// Block Korkine-Zolotarev reduction with exact block enumeration.
void bkz(Basis& basis, int block_size, int max_tours = 8, double delta = 0.99);

// Gram-Schmidt coefficients and squared norms ||b*_i||^2.
struct Gso {
  std::vector<std::vector<long double>> mu;
  std::vector<long double> r;
};
Gso gram_schmidt(const Basis& basis);

struct EnumerationResult {
  std::optional<Row> vector;       // accepted lattice vector
  std::optional<Row> coefficients; // its coordinates in the given basis
  std::uint64_t nodes = 0;
  bool budget_exhausted = false;
};

// Schnorr-Euchner enumeration of nonzero vectors with squared norm at most
// radius_sq (a float pruning radius). Every candidate is offered to `accept`;
// the first accepted vector ends the search. Only one of each +/- pair is
// visited.
EnumerationResult enumerate(const Basis& basis, long double radius_sq,
                            const std::function<bool(const Row&)>& accept,
                            std::uint64_t node_budget);

// Shortest nonzero vector by exhaustive enumeration (small dimensions).
Row shortest_vector(const Basis& basis);

mpz_class squared_norm(const Row& v);
long double to_long_double(const mpz_class& z);

}  // namespace qpadl::pow::lattice
