#include "qpadl/pow/lbp.hpp"

#include <mpfr.h>

#include <cmath>
#include <numbers>

#include "qpadl/common/error.hpp"

namespace qpadl::pow {
namespace {

constexpr std::uint32_t kMaxDimension = 4096;

mpz_class random_bits(Rng& rng, std::uint32_t bits) {
  Bytes buf = rng.bytes((bits + 7) / 8);
  mpz_class z;
  mpz_import(z.get_mpz_t(), buf.size(), -1, 1, 0, 0, buf.data());
  mpz_fdiv_r_2exp(z.get_mpz_t(), z.get_mpz_t(), bits);
  return z;
}

mpz_class random_below(Rng& rng, const mpz_class& bound) {
  const auto bits = static_cast<std::uint32_t>(mpz_sizeinbase(bound.get_mpz_t(), 2));
  for (;;) {
    mpz_class z = random_bits(rng, bits);
    if (z < bound) return z;
  }
}

class BitWriter {
 public:
  explicit BitWriter(std::size_t total_bits) : out_((total_bits + 7) / 8, 0) {}
  void put(const mpz_class& z, std::uint32_t width) {
    for (std::uint32_t i = 0; i < width; ++i, ++pos_) {
      if (mpz_tstbit(z.get_mpz_t(), i) != 0) out_[pos_ / 8] |= static_cast<std::uint8_t>(1u << (pos_ % 8));
    }
  }
  Bytes take() && { return std::move(out_); }

 private:
  Bytes out_;
  std::size_t pos_ = 0;
};

class BitReader {
 public:
  explicit BitReader(ByteSpan data) : data_(data) {}
  mpz_class get(std::uint32_t width) {
    mpz_class z = 0;
    for (std::uint32_t i = 0; i < width; ++i, ++pos_) {
      if (((data_[pos_ / 8] >> (pos_ % 8)) & 1u) != 0) mpz_setbit(z.get_mpz_t(), i);
    }
    return z;
  }

 private:
  ByteSpan data_;
  std::size_t pos_ = 0;
};

std::size_t packed_bytes(std::size_t count, std::uint32_t width) { return (count * width + 7) / 8; }

// Largest integer R with R^2 <= bound, i.e. the coordinate range of any
// vector that can pass the norm test.
mpz_class coordinate_limit(const mpz_class& bound_sq_scaled) {
  mpz_class q = bound_sq_scaled >> kLbpBoundFractionBits;
  mpz_class r;
  mpz_sqrt(r.get_mpz_t(), q.get_mpz_t());
  return r;
}

std::uint32_t solution_width(const mpz_class& limit) {
  mpz_class span = 2 * limit;
  return static_cast<std::uint32_t>(mpz_sizeinbase(span.get_mpz_t(), 2));
}

}  // namespace

double lbp_alpha(std::uint32_t n) {
  const double nd = static_cast<double>(n);
  return 1.05 * std::exp(std::lgamma(nd / 2.0 + 1.0) / nd) / std::sqrt(std::numbers::pi);
}

mpz_class lbp_bound_sq_scaled(std::uint32_t n, const mpz_class& p) {
  if (n < 2) fail(Errc::kParameter, "lattice dimension must be at least 2");
  const auto prec = static_cast<mpfr_prec_t>(mpz_sizeinbase(p.get_mpz_t(), 2) * 2 + 320);
  mpfr_t a, t, pi;
  mpfr_inits2(prec, a, t, pi, static_cast<mpfr_ptr>(nullptr));

  // alpha^2 = 1.1025 * Gamma(n/2+1)^(2/n) / pi, every step rounded down.
  mpfr_set_ui(t, n, MPFR_RNDD);
  mpfr_div_ui(t, t, 2, MPFR_RNDD);
  mpfr_add_ui(t, t, 1, MPFR_RNDD);
  mpfr_lngamma(a, t, MPFR_RNDD);
  mpfr_mul_ui(a, a, 2, MPFR_RNDD);
  mpfr_div_ui(a, a, n, MPFR_RNDD);
  mpfr_exp(a, a, MPFR_RNDD);
  mpfr_const_pi(pi, MPFR_RNDU);
  mpfr_div(a, a, pi, MPFR_RNDD);
  mpfr_mul_ui(a, a, 11025, MPFR_RNDD);
  mpfr_div_ui(a, a, 10000, MPFR_RNDD);

  // p^(2/n)
  mpfr_set_z(t, p.get_mpz_t(), MPFR_RNDD);
  mpfr_log(t, t, MPFR_RNDD);
  mpfr_mul_ui(t, t, 2, MPFR_RNDD);
  mpfr_div_ui(t, t, n, MPFR_RNDD);
  mpfr_exp(t, t, MPFR_RNDD);

  mpfr_mul(a, a, t, MPFR_RNDD);
  mpfr_mul_2ui(a, a, kLbpBoundFractionBits, MPFR_RNDD);
  mpz_class out;
  mpfr_get_z(out.get_mpz_t(), a, MPFR_RNDD);
  mpfr_clears(a, t, pi, static_cast<mpfr_ptr>(nullptr));
  return out;
}

bool lbp_within_bound(const lattice::Row& v, const mpz_class& bound_sq_scaled) {
  mpz_class n2 = lattice::squared_norm(v);
  if (n2 == 0) return false;
  n2 <<= kLbpBoundFractionBits;
  return n2 <= bound_sq_scaled;
}

std::size_t LbpPuzzle::serialized_size() const {
  return packed_bytes(dimension, field_bits()) + 4 + 4;
}

lattice::Basis LbpPuzzle::basis() const {
  const std::uint32_t n = dimension;
  lattice::Basis b(n, lattice::Row(n, 0));
  b[0][0] = p;
  for (std::uint32_t j = 1; j < n; ++j) {
    b[j][0] = x[j - 1];
    b[j][j] = 1;
  }
  return b;
}

Bytes LbpPuzzle::serialize() const {
  if (x.size() + 1 != dimension) fail(Errc::kFormat, "lattice puzzle sample count");
  const std::uint32_t w = field_bits();
  BitWriter bits(static_cast<std::size_t>(dimension) * w);
  bits.put(p, w);
  for (const auto& xj : x) bits.put(xj, w);
  ByteWriter out(serialized_size());
  out.raw(std::move(bits).take());
  out.f32(alpha);
  out.u32(dimension);
  return std::move(out).take();
}

LbpPuzzle LbpPuzzle::deserialize(ByteSpan data) {
  if (data.size() < 8) fail(Errc::kFormat, "lattice puzzle truncated");
  ByteReader tail(data.subspan(data.size() - 8));
  const float alpha = tail.f32();
  const std::uint32_t n = tail.u32();
  if (n < 2 || n > kMaxDimension) fail(Errc::kFormat, "lattice dimension out of range");
  LbpPuzzle puzzle;
  puzzle.dimension = n;
  if (data.size() != puzzle.serialized_size()) fail(Errc::kFormat, "lattice puzzle length mismatch");
  if (alpha != static_cast<float>(lbp_alpha(n))) fail(Errc::kFormat, "lattice puzzle alpha mismatch");
  puzzle.alpha = alpha;
  BitReader bits(data.first(data.size() - 8));
  const std::uint32_t w = puzzle.field_bits();
  puzzle.p = bits.get(w);
  if (mpz_probab_prime_p(puzzle.p.get_mpz_t(), 30) == 0) fail(Errc::kFormat, "lattice modulus is not prime");
  puzzle.x.reserve(n - 1);
  for (std::uint32_t j = 1; j < n; ++j) {
    puzzle.x.push_back(bits.get(w));
    if (puzzle.x.back() >= puzzle.p) fail(Errc::kFormat, "lattice sample out of range");
  }
  return puzzle;
}

Bytes LbpSolution::serialize(const LbpPuzzle& puzzle) const {
  const mpz_class limit = coordinate_limit(lbp_bound_sq_scaled(puzzle.dimension, puzzle.p));
  const std::uint32_t w = solution_width(limit);
  if (v.size() != puzzle.dimension) fail(Errc::kFormat, "solution dimension mismatch");
  BitWriter bits(v.size() * w);
  for (const auto& vi : v) {
    if (abs(vi) > limit) fail(Errc::kParameter, "solution coordinate exceeds the norm bound");
    bits.put(vi + limit, w);
  }
  return std::move(bits).take();
}

LbpSolution LbpSolution::deserialize(const LbpPuzzle& puzzle, ByteSpan data) {
  const mpz_class limit = coordinate_limit(lbp_bound_sq_scaled(puzzle.dimension, puzzle.p));
  const std::uint32_t w = solution_width(limit);
  if (data.size() != packed_bytes(puzzle.dimension, w)) fail(Errc::kFormat, "solution length mismatch");
  BitReader bits(data);
  LbpSolution s;
  s.v.reserve(puzzle.dimension);
  for (std::uint32_t i = 0; i < puzzle.dimension; ++i) s.v.push_back(bits.get(w) - limit);
  if (auto nu = lbp_coefficients(puzzle, s.v)) s.nu = std::move(*nu);
  return s;
}

std::optional<lattice::Row> lbp_coefficients(const LbpPuzzle& puzzle, const lattice::Row& v) {
  if (v.size() != puzzle.dimension || puzzle.x.size() + 1 != puzzle.dimension) return std::nullopt;
  mpz_class head = v[0];
  for (std::size_t j = 1; j < v.size(); ++j) mpz_submul(head.get_mpz_t(), puzzle.x[j - 1].get_mpz_t(), v[j].get_mpz_t());
  if (mpz_divisible_p(head.get_mpz_t(), puzzle.p.get_mpz_t()) == 0) return std::nullopt;
  lattice::Row nu = v;
  mpz_divexact(nu[0].get_mpz_t(), head.get_mpz_t(), puzzle.p.get_mpz_t());
  return nu;
}

LbpPuzzle lbp_gen(std::uint32_t dimension, Rng& rng, const LbpGenOptions& options, std::uint32_t* resamples) {
  if (dimension < 2 || dimension > kMaxDimension) fail(Errc::kParameter, "lattice dimension out of range");
  const std::uint32_t bits = options.prime_bits == 0 ? 10 * dimension : options.prime_bits;
  if (bits < 4 || bits > 10 * dimension) fail(Errc::kParameter, "prime width must fit the 10n-bit wire field");
  if (resamples != nullptr) *resamples = 0;

  for (std::uint32_t attempt = 0;; ++attempt) {
    LbpPuzzle puzzle;
    puzzle.dimension = dimension;
    do {
      mpz_class seed = random_bits(rng, bits);
      mpz_setbit(seed.get_mpz_t(), bits - 1);
      mpz_nextprime(puzzle.p.get_mpz_t(), seed.get_mpz_t());
    } while (mpz_sizeinbase(puzzle.p.get_mpz_t(), 2) > bits);
    puzzle.x.reserve(dimension - 1);
    for (std::uint32_t j = 1; j < dimension; ++j) puzzle.x.push_back(random_below(rng, puzzle.p));
    puzzle.alpha = static_cast<float>(lbp_alpha(dimension));

    if (!options.ensure_solvable) return puzzle;
    try {
      (void)lbp_solve(puzzle);
      return puzzle;
    } catch (const Error& e) {
      if (e.code() != Errc::kSolverExhausted) throw;
    }
    if (resamples != nullptr) ++*resamples;
    if (attempt + 1 >= options.max_resamples) fail(Errc::kSolverExhausted, "no solvable lattice instance found");
  }
}

LbpSolution lbp_solve(const LbpPuzzle& puzzle, const LbpSolveOptions& options, LbpSolveStats* stats) {
  const std::uint32_t n = puzzle.dimension;
  const mpz_class bound = lbp_bound_sq_scaled(n, puzzle.p);
  lattice::Basis b = puzzle.basis();

  int block = options.bkz_block;
  if (block < 0) block = n <= 24 ? 0 : static_cast<int>(std::min<std::uint32_t>(20, n / 2));
  if (block >= 2) {
    lattice::bkz(b, block);
  } else {
    lattice::lll(b);
  }

  auto finish = [&](lattice::Row v) {
    LbpSolution s;
    auto nu = lbp_coefficients(puzzle, v);
    if (!nu) fail(Errc::kSolverExhausted, "reduced vector left the lattice");
    s.v = std::move(v);
    s.nu = std::move(*nu);
    return s;
  };

  for (const auto& row : b) {
    if (lbp_within_bound(row, bound)) {
      if (stats != nullptr) stats->found_by_reduction = true;
      return finish(row);
    }
  }

  const long double radius = lattice::to_long_double(bound) /
                             ldexpl(1.0L, static_cast<int>(kLbpBoundFractionBits)) * (1 + 1e-12L);
  auto result = lattice::enumerate(b, radius, [&](const lattice::Row& v) { return lbp_within_bound(v, bound); },
                                   options.node_budget);
  if (stats != nullptr) stats->enumeration_nodes = result.nodes;
  if (!result.vector) {
    fail(Errc::kSolverExhausted, result.budget_exhausted ? "enumeration node budget exhausted"
                                                         : "no lattice vector within the bound");
  }
  return finish(std::move(*result.vector));
}

bool lbp_verify(const LbpPuzzle& puzzle, const LbpSolution& solution) {
  const std::uint32_t n = puzzle.dimension;
  if (solution.v.size() != n || solution.nu.size() != n || puzzle.x.size() + 1 != n) return false;
  // v = B nu with B's rows as basis vectors.
  mpz_class head = puzzle.p * solution.nu[0];
  for (std::uint32_t j = 1; j < n; ++j) {
    if (solution.v[j] != solution.nu[j]) return false;
    mpz_addmul(head.get_mpz_t(), puzzle.x[j - 1].get_mpz_t(), solution.nu[j].get_mpz_t());
  }
  if (head != solution.v[0]) return false;
  return lbp_within_bound(solution.v, lbp_bound_sq_scaled(n, puzzle.p));
}

}  // namespace qpadl::pow
