#include "qpadl/pow/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "qpadl/common/error.hpp"

namespace qpadl::pow::lattice {
namespace {

using ld = long double;

constexpr ld kEta = 0.51L;
constexpr int kMaxSizeReductionPasses = 200;

mpz_class from_integral(ld x) {
  if (fabsl(x) < 9.0e18L) return mpz_class(static_cast<long>(x));
  int e = 0;
  ld m = frexpl(x, &e);
  mpz_class z(static_cast<long>(ldexpl(m, 62)));
  mpz_mul_2exp(z.get_mpz_t(), z.get_mpz_t(), static_cast<mp_bitcnt_t>(e - 62));
  return z;
}

mpz_class dot(const Row& a, const Row& b) {
  mpz_class s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) mpz_addmul(s.get_mpz_t(), a[i].get_mpz_t(), b[i].get_mpz_t());
  return s;
}

using Gram = std::vector<std::vector<mpz_class>>;

Gram gram_of(const Basis& b) {
  const std::size_t d = b.size();
  Gram g(d, std::vector<mpz_class>(d));
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      g[i][j] = dot(b[i], b[j]);
      g[j][i] = g[i][j];
    }
  }
  return g;
}

// Incremental L2-style reduction state.
class Reducer {
 public:
  Reducer(Basis& b, double delta, LllStats* stats)
      : b_(b), delta_(static_cast<ld>(delta)), stats_(stats) {
    b_.erase(std::remove_if(b_.begin(), b_.end(),
                            [](const Row& r) { return std::all_of(r.begin(), r.end(), [](const mpz_class& z) { return z == 0; }); }),
             b_.end());
    g_ = gram_of(b_);
    const std::size_t d = b_.size();
    mu_.assign(d, std::vector<ld>(d, 0));
    r_.assign(d, std::vector<ld>(d, 0));
  }

  void run() {
    if (b_.empty()) return;
    r_[0][0] = to_long_double(g_[0][0]);
    std::size_t k = 1;
    while (k < b_.size()) {
      size_reduce(k);
      if (g_[k][k] == 0) {
        erase_row(k);
        continue;
      }
      // ||pi_{k-1}(b_k)||^2 straight from the Gram entries.
      ld s = to_long_double(g_[k][k]);
      for (std::size_t j = 0; j + 1 < k; ++j) s -= mu_[k][j] * r_[k][j];
      if (delta_ * r_[k - 1][k - 1] > s) {
        swap_rows(k);
        if (stats_ != nullptr) ++stats_->swaps;
        if (k == 1) {
          r_[0][0] = to_long_double(g_[0][0]);
        } else {
          --k;
        }
      } else {
        ++k;
      }
    }
  }

 private:
  void compute_row(std::size_t k) {
    for (std::size_t j = 0; j < k; ++j) {
      ld s = to_long_double(g_[k][j]);
      for (std::size_t i = 0; i < j; ++i) s -= mu_[j][i] * r_[k][i];
      r_[k][j] = s;
      mu_[k][j] = s / r_[j][j];
    }
    ld s = to_long_double(g_[k][k]);
    for (std::size_t j = 0; j < k; ++j) s -= mu_[k][j] * r_[k][j];
    r_[k][k] = s;
  }

  void size_reduce(std::size_t k) {
    for (int pass = 0;; ++pass) {
      if (pass > kMaxSizeReductionPasses) fail(Errc::kSolverExhausted, "LLL size reduction did not converge");
      compute_row(k);
      bool changed = false;
      for (std::size_t j = k; j-- > 0;) {
        const ld m = mu_[k][j];
        if (fabsl(m) <= kEta) continue;
        const ld x = nearbyintl(m);
        subtract_multiple(k, j, from_integral(x));
        for (std::size_t i = 0; i < j; ++i) mu_[k][i] -= x * mu_[j][i];
        mu_[k][j] -= x;
        changed = true;
        if (stats_ != nullptr) ++stats_->reductions;
      }
      if (!changed) return;
    }
  }

  // b_k -= x * b_j, keeping the Gram matrix exact.
  void subtract_multiple(std::size_t k, std::size_t j, const mpz_class& x) {
    for (std::size_t c = 0; c < b_[k].size(); ++c) {
      mpz_submul(b_[k][c].get_mpz_t(), x.get_mpz_t(), b_[j][c].get_mpz_t());
    }
    mpz_class gkk = g_[k][k] - 2 * x * g_[k][j] + x * x * g_[j][j];
    for (std::size_t i = 0; i < b_.size(); ++i) {
      if (i == k) continue;
      mpz_submul(g_[k][i].get_mpz_t(), x.get_mpz_t(), g_[j][i].get_mpz_t());
      g_[i][k] = g_[k][i];
    }
    g_[k][k] = gkk;
  }

  void swap_rows(std::size_t k) {
    std::swap(b_[k], b_[k - 1]);
    std::swap(g_[k], g_[k - 1]);
    for (auto& row : g_) std::swap(row[k], row[k - 1]);
  }

  void erase_row(std::size_t k) {
    b_.erase(b_.begin() + static_cast<std::ptrdiff_t>(k));
    g_.erase(g_.begin() + static_cast<std::ptrdiff_t>(k));
    for (auto& row : g_) row.erase(row.begin() + static_cast<std::ptrdiff_t>(k));
    mu_.pop_back();
    r_.pop_back();
  }

  Basis& b_;
  ld delta_;
  LllStats* stats_;
  Gram g_;
  std::vector<std::vector<ld>> mu_;
  std::vector<std::vector<ld>> r_;
};

// Schnorr-Euchner walk over the projected sublattice spanned by rows
// [begin, end). on_leaf(x, dist) sees every nonzero coefficient vector with
// dist <= radius_sq, may shrink radius_sq, and returns true to stop.
template <class OnLeaf>
bool walk(const Gso& g, std::size_t begin, std::size_t end, ld& radius_sq, OnLeaf&& on_leaf,
          std::uint64_t budget, std::uint64_t& nodes) {
  const std::size_t m = end - begin;
  std::vector<std::int64_t> x(m, 0), dx(m, 1), ddx(m, 1);
  std::vector<ld> c(m, 0), l(m + 1, 0);

  auto advance = [&](std::size_t k) {
    if (l[k + 1] == 0) {
      ++x[k];
    } else {
      x[k] += dx[k];
      ddx[k] = -ddx[k];
      dx[k] = ddx[k] - dx[k];
    }
  };

  std::size_t k = m - 1;
  for (;;) {
    if (++nodes > budget) return true;
    const ld diff = static_cast<ld>(x[k]) - c[k];
    const ld lk = l[k + 1] + diff * diff * g.r[begin + k];
    if (lk <= radius_sq) {
      if (k == 0) {
        if (lk > 0 && on_leaf(x, lk)) return false;
        advance(0);
      } else {
        l[k] = lk;
        --k;
        ld s = 0;
        for (std::size_t j = k + 1; j < m; ++j) s -= static_cast<ld>(x[j]) * g.mu[begin + j][begin + k];
        c[k] = s;
        x[k] = std::llround(s);
        dx[k] = ddx[k] = s < static_cast<ld>(x[k]) ? -1 : 1;
      }
    } else {
      if (++k == m) return false;
      advance(k);
    }
  }
}

Row combine(const Basis& b, std::size_t begin, const std::vector<std::int64_t>& x) {
  Row v(b.front().size(), 0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] == 0) continue;
    const mpz_class xi(static_cast<long>(x[i]));
    for (std::size_t c = 0; c < v.size(); ++c) mpz_addmul(v[c].get_mpz_t(), xi.get_mpz_t(), b[begin + i][c].get_mpz_t());
  }
  return v;
}

void add_multiple(Row& dst, const Row& src, std::int64_t q) {
  const mpz_class qq(static_cast<long>(q));
  for (std::size_t c = 0; c < dst.size(); ++c) mpz_addmul(dst[c].get_mpz_t(), qq.get_mpz_t(), src[c].get_mpz_t());
}

// Unimodular update of rows [begin, begin+u.size()) so that row `begin`
// becomes sum u_i b_{begin+i}. Requires gcd(u) = 1.
void insert_primitive(Basis& b, std::size_t begin, std::vector<std::int64_t> u) {
  auto w = [&](std::size_t i) -> Row& { return b[begin + i]; };
  for (;;) {
    std::size_t a = u.size(), c = u.size();
    for (std::size_t i = 0; i < u.size(); ++i) {
      if (u[i] == 0) continue;
      if (a == u.size()) {
        a = i;
      } else if (c == u.size()) {
        c = i;
      }
    }
    if (c == u.size()) break;
    // Euclid on (u_a, u_c): u_a w_a + u_c w_c is preserved.
    while (u[a] != 0 && u[c] != 0) {
      if (std::llabs(u[a]) >= std::llabs(u[c])) {
        const std::int64_t q = u[a] / u[c];
        u[a] -= q * u[c];
        add_multiple(w(c), w(a), q);
      } else {
        const std::int64_t q = u[c] / u[a];
        u[c] -= q * u[a];
        add_multiple(w(a), w(c), q);
      }
    }
  }
  std::size_t idx = 0;
  while (u[idx] == 0) ++idx;
  if (u[idx] == -1) {
    for (auto& z : w(idx)) z = -z;
  }
  std::rotate(b.begin() + static_cast<std::ptrdiff_t>(begin), b.begin() + static_cast<std::ptrdiff_t>(begin + idx),
              b.begin() + static_cast<std::ptrdiff_t>(begin + idx + 1));
}

}  // namespace

long double to_long_double(const mpz_class& z) {
  const int sign = mpz_sgn(z.get_mpz_t());
  if (sign == 0) return 0;
  const std::size_t bits = mpz_sizeinbase(z.get_mpz_t(), 2);
  mpz_class a = abs(z);
  ld value;
  if (bits <= 64) {
    value = static_cast<ld>(mpz_get_ui(a.get_mpz_t()));
  } else {
    mpz_tdiv_q_2exp(a.get_mpz_t(), a.get_mpz_t(), bits - 64);
    value = ldexpl(static_cast<ld>(mpz_get_ui(a.get_mpz_t())), static_cast<int>(bits - 64));
  }
  return sign < 0 ? -value : value;
}

mpz_class squared_norm(const Row& v) { return dot(v, v); }

void lll(Basis& basis, double delta, LllStats* stats) {
  if (delta <= 0.25 || delta >= 1.0) fail(Errc::kParameter, "LLL delta must be in (1/4, 1)");
  Reducer(basis, delta, stats).run();
}

Gso gram_schmidt(const Basis& basis) {
  const std::size_t d = basis.size();
  Gram g = gram_of(basis);
  Gso out;
  out.mu.assign(d, std::vector<ld>(d, 0));
  out.r.assign(d, 0);
  std::vector<std::vector<ld>> rr(d, std::vector<ld>(d, 0));
  for (std::size_t k = 0; k < d; ++k) {
    for (std::size_t j = 0; j < k; ++j) {
      ld s = to_long_double(g[k][j]);
      for (std::size_t i = 0; i < j; ++i) s -= out.mu[j][i] * rr[k][i];
      rr[k][j] = s;
      out.mu[k][j] = s / out.r[j];
    }
    ld s = to_long_double(g[k][k]);
    for (std::size_t j = 0; j < k; ++j) s -= out.mu[k][j] * rr[k][j];
    out.r[k] = s;
    out.mu[k][k] = 1;
  }
  return out;
}

void bkz(Basis& basis, int block_size, int max_tours, double delta) {
  lll(basis, delta);
  if (block_size < 2) return;
  const std::uint64_t kBlockBudget = 1ull << 26;
  for (int tour = 0; tour < max_tours; ++tour) {
    bool changed = false;
    for (std::size_t kk = 0; kk + 1 < basis.size(); ++kk) {
      const std::size_t end = std::min(basis.size(), kk + static_cast<std::size_t>(block_size));
      const Gso g = gram_schmidt(basis);
      ld radius = g.r[kk] * 0.99L;
      std::vector<std::int64_t> best;
      std::uint64_t nodes = 0;
      walk(g, kk, end, radius,
           [&](const std::vector<std::int64_t>& x, ld dist) {
             best = x;
             radius = dist * (1 - 1e-9L);
             return false;
           },
           kBlockBudget, nodes);
      if (best.empty()) continue;
      std::int64_t gcd = 0;
      for (auto v : best) gcd = std::gcd(gcd, v);
      for (auto& v : best) v /= gcd;
      insert_primitive(basis, kk, best);
      lll(basis, delta);
      changed = true;
    }
    if (!changed) break;
  }
}

EnumerationResult enumerate(const Basis& basis, long double radius_sq,
                            const std::function<bool(const Row&)>& accept, std::uint64_t node_budget) {
  EnumerationResult out;
  if (basis.empty()) return out;
  const Gso g = gram_schmidt(basis);
  ld radius = radius_sq;
  out.budget_exhausted = walk(g, 0, basis.size(), radius,
                              [&](const std::vector<std::int64_t>& x, ld) {
                                Row v = combine(basis, 0, x);
                                if (!accept(v)) return false;
                                Row coeffs;
                                coeffs.reserve(x.size());
                                for (auto xi : x) coeffs.emplace_back(static_cast<long>(xi));
                                out.vector = std::move(v);
                                out.coefficients = std::move(coeffs);
                                return true;
                              },
                              node_budget, out.nodes);
  return out;
}

Row shortest_vector(const Basis& basis) {
  Basis b = basis;
  lll(b);
  const Gso g = gram_schmidt(b);
  ld radius = g.r[0] * (1 + 1e-9L);
  std::vector<std::int64_t> best;
  std::uint64_t nodes = 0;
  walk(g, 0, b.size(), radius,
       [&](const std::vector<std::int64_t>& x, ld dist) {
         best = x;
         radius = dist * (1 + 1e-12L);
         return false;
       },
       std::numeric_limits<std::uint64_t>::max(), nodes);
  // The float radius can admit ties; settle the minimum exactly.
  Row v = best.empty() ? b.front() : combine(b, 0, best);
  if (squared_norm(b.front()) < squared_norm(v)) v = b.front();
  return v;
}

}  // namespace qpadl::pow::lattice
