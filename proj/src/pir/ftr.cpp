#include "qpadl/pir/ftr.hpp"

#include <algorithm>
#include <bit>
#include <set>
#include <string>

#include "qpadl/common/error.hpp"

namespace qpadl::pir {
namespace {

void check_modulus(std::uint32_t p) {
  if (p > kernels::kMaxFieldModulus || !is_prime(p)) {
    fail(Errc::kParameter, "field modulus must be a prime not above 2^17");
  }
}

kernels::FieldMatrix to_matrix(std::span<const std::vector<std::uint32_t>> rows, std::size_t cols) {
  kernels::FieldMatrix m(rows.size(), cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != cols) fail(Errc::kGeometry, "query length differs from row count");
    std::copy(rows[i].begin(), rows[i].end(), m.data.begin() + static_cast<std::ptrdiff_t>(i * cols));
  }
  return m;
}

// Weights w with sum_i w[i] * f(xs[i]) = f(at) for every f of degree < xs.size().
std::vector<std::uint32_t> lagrange_weights(const PrimeField& f, std::span<const std::uint32_t> xs, std::uint32_t at) {
  std::vector<std::uint32_t> w(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    std::uint32_t num = 1;
    std::uint32_t den = 1;
    for (std::size_t j = 0; j < xs.size(); ++j) {
      if (j == i) continue;
      num = f.mul(num, f.sub(at, xs[j]));
      den = f.mul(den, f.sub(xs[i], xs[j]));
    }
    w[i] = f.mul(num, f.inv(den));
  }
  return w;
}

// Solves A x = b (rows x cols augmented matrix) mod p; free variables are
// set to zero. Returns nothing if the system is inconsistent.
std::optional<std::vector<std::uint32_t>> solve(const PrimeField& f, std::vector<std::vector<std::uint32_t>> a,
                                                std::size_t cols) {
  const std::size_t rows = a.size();
  std::vector<std::size_t> pivot_col;
  std::size_t r = 0;
  for (std::size_t c = 0; c < cols && r < rows; ++c) {
    std::size_t sel = r;
    while (sel < rows && a[sel][c] == 0) ++sel;
    if (sel == rows) continue;
    std::swap(a[r], a[sel]);
    const std::uint32_t inv = f.inv(a[r][c]);
    for (auto& v : a[r]) v = f.mul(v, inv);
    for (std::size_t i = 0; i < rows; ++i) {
      if (i == r || a[i][c] == 0) continue;
      const std::uint32_t factor = a[i][c];
      for (std::size_t j = c; j <= cols; ++j) a[i][j] = f.sub(a[i][j], f.mul(factor, a[r][j]));
    }
    pivot_col.push_back(c);
    ++r;
  }
  for (std::size_t i = r; i < rows; ++i) {
    if (a[i][cols] != 0) return std::nullopt;
  }
  std::vector<std::uint32_t> x(cols, 0);
  for (std::size_t i = 0; i < r; ++i) x[pivot_col[i]] = a[i][cols];
  return x;
}

}  // namespace

unsigned ftr_word_bits(std::uint32_t modulus) {
  if (modulus < 2) fail(Errc::kParameter, "field modulus must be at least 2");
  const unsigned log2p = static_cast<unsigned>(std::bit_width(modulus)) - 1;
  return std::bit_floor(std::min(8u, log2p));
}

std::size_t ftr_words_per_block(const db::DbMatrix& db, std::uint32_t modulus) {
  return db.block_bits() / ftr_word_bits(modulus);
}

FtrQuery ftr_query_gen(std::uint64_t theta, std::uint64_t rows, unsigned servers, unsigned t, std::uint32_t modulus,
                       Rng& rng) {
  check_modulus(modulus);
  if (servers == 0) fail(Errc::kParameter, "FTR needs at least one server");
  if (t >= servers) fail(Errc::kParameter, "privacy degree must be below the server count");
  if (modulus <= servers) fail(Errc::kParameter, "field too small for the evaluation points");
  if (theta >= rows) fail(Errc::kParameter, "target index out of range");
  const PrimeField f(modulus);
  FtrQuery q;
  q.t = t;
  q.modulus = modulus;
  for (unsigned i = 0; i < servers; ++i) q.eval_points.push_back(ftr_eval_point(i));
  q.per_server.assign(servers, std::vector<std::uint32_t>(rows));
  std::vector<std::uint32_t> poly(t + 1);
  for (std::uint64_t j = 0; j < rows; ++j) {
    poly[0] = j == theta ? 1 : 0;
    for (unsigned d = 1; d <= t; ++d) poly[d] = static_cast<std::uint32_t>(rng.uniform_below(modulus));
    for (unsigned i = 0; i < servers; ++i) q.per_server[i][j] = f.eval(poly, q.eval_points[i]);
  }
  return q;
}

std::vector<std::uint32_t> ftr_respond(std::span<const std::uint32_t> query, const db::DbMatrix& db,
                                       std::uint32_t modulus) {
  check_modulus(modulus);
  const std::vector<std::uint32_t> row(query.begin(), query.end());
  const auto q = to_matrix(std::span(&row, 1), db.rows());
  for (auto v : row) {
    if (v >= modulus) fail(Errc::kParameter, "query element outside the field");
  }
  return kernels::scalar_matmul_field(q, kernels::FieldDbView::of(db, ftr_word_bits(modulus)), modulus).data;
}

std::vector<std::vector<std::uint32_t>> ftr_respond_batch(std::span<const std::vector<std::uint32_t>> queries,
                                                          const db::DbMatrix& db, std::uint32_t modulus,
                                                          const kernels::Kernel& kernel) {
  check_modulus(modulus);
  const auto q = to_matrix(queries, db.rows());
  for (auto v : q.data) {
    if (v >= modulus) fail(Errc::kParameter, "query element outside the field");
  }
  const auto out = kernel.field(q, kernels::FieldDbView::of(db, ftr_word_bits(modulus)), modulus);
  std::vector<std::vector<std::uint32_t>> result(queries.size());
  for (std::size_t i = 0; i < queries.size(); ++i) {
    result[i].assign(out.data.begin() + static_cast<std::ptrdiff_t>(i * out.cols),
                     out.data.begin() + static_cast<std::ptrdiff_t>((i + 1) * out.cols));
  }
  return result;
}

std::optional<std::vector<std::uint32_t>> BerlekampWelchDecoder::decode(const PrimeField& f,
                                                                        std::span<const std::uint32_t> xs,
                                                                        std::span<const std::uint32_t> ys, unsigned t,
                                                                        unsigned max_errors) const {
  const std::size_t k = xs.size();
  const unsigned e = max_errors;
  if (k < 2 * e + t + 1) return std::nullopt;
  // Unknowns: Q (degree e + t, e + t + 1 coefficients), then E (monic of
  // degree e, e low coefficients). Row i of the system: Q(x_i) - y_i E_low(x_i) = y_i x_i^e.
  const std::size_t nq = e + t + 1;
  const std::size_t cols = nq + e;
  std::vector<std::vector<std::uint32_t>> a(k, std::vector<std::uint32_t>(cols + 1, 0));
  for (std::size_t i = 0; i < k; ++i) {
    std::uint32_t pw = 1;
    for (std::size_t j = 0; j < nq; ++j) {
      a[i][j] = pw;
      if (j < e) a[i][nq + j] = f.sub(0, f.mul(ys[i], pw));
      pw = f.mul(pw, xs[i]);
    }
    a[i][cols] = f.mul(ys[i], f.pow(xs[i], e));
  }
  const auto sol = solve(f, std::move(a), cols);
  if (!sol) return std::nullopt;
  std::vector<std::uint32_t> q(sol->begin(), sol->begin() + static_cast<std::ptrdiff_t>(nq));
  std::vector<std::uint32_t> err(sol->begin() + static_cast<std::ptrdiff_t>(nq), sol->end());
  err.push_back(1);
  // Long division Q / E; E is monic.
  std::vector<std::uint32_t> p(t + 1, 0);
  for (std::size_t d = nq; d-- > e;) {
    const std::uint32_t c = q[d];
    p[d - e] = c;
    if (c == 0) continue;
    for (std::size_t j = 0; j <= e; ++j) q[d - e + j] = f.sub(q[d - e + j], f.mul(c, err[j]));
  }
  for (std::size_t j = 0; j < e; ++j) {
    if (q[j] != 0) return std::nullopt;
  }
  std::size_t disagreements = 0;
  for (std::size_t i = 0; i < k; ++i) {
    if (f.eval(p, xs[i]) != ys[i]) ++disagreements;
  }
  if (disagreements > e) return std::nullopt;
  return p;
}

Bytes ftr_reconstruct(std::span<const FtrResponse> responses, unsigned t, std::uint32_t modulus,
                      std::optional<unsigned> max_errors, FtrDecodeReport* report, const FtrDecoder* decoder) {
  check_modulus(modulus);
  const std::size_t k = responses.size();
  if (k <= t) {
    fail(Errc::kIncomplete, std::to_string(k) + " responses, need at least " + std::to_string(t + 1));
  }
  const PrimeField f(modulus);
  const unsigned w = ftr_word_bits(modulus);
  const std::size_t words = responses[0].values.size();
  std::vector<std::uint32_t> xs(k);
  std::set<unsigned> seen;
  for (std::size_t i = 0; i < k; ++i) {
    if (!seen.insert(responses[i].server).second) fail(Errc::kParameter, "duplicate server in responses");
    if (ftr_eval_point(responses[i].server) >= modulus) fail(Errc::kParameter, "server index outside the field");
    if (responses[i].values.size() != words) fail(Errc::kGeometry, "responses differ in length");
    xs[i] = ftr_eval_point(responses[i].server);
  }
  if ((words * w) % 8 != 0) fail(Errc::kGeometry, "response does not cover whole bytes");
  const unsigned radius = std::min(max_errors.value_or(ftr_unique_radius(k, t)), ftr_unique_radius(k, t));
  static const BerlekampWelchDecoder default_decoder;
  const FtrDecoder& dec = decoder ? *decoder : default_decoder;

  // The first t+1 points determine the polynomial; the rest check it.
  const std::span<const std::uint32_t> base(xs.data(), t + 1);
  const auto at_zero = lagrange_weights(f, base, 0);
  std::vector<std::vector<std::uint32_t>> at_extra;
  for (std::size_t m = t + 1; m < k; ++m) at_extra.push_back(lagrange_weights(f, base, xs[m]));

  std::set<unsigned> suspected;
  std::size_t corrected = 0;
  Bytes out(words * w / 8, 0);
  std::vector<std::uint32_t> ys(k);
  for (std::size_t j = 0; j < words; ++j) {
    for (std::size_t i = 0; i < k; ++i) {
      ys[i] = responses[i].values[j];
      if (ys[i] >= modulus) ys[i] %= modulus;  // out-of-range values count as corrupted points
    }
    bool consistent = true;
    for (std::size_t m = 0; m < at_extra.size() && consistent; ++m) {
      std::uint64_t acc = 0;
      for (unsigned i = 0; i <= t; ++i) acc += std::uint64_t{at_extra[m][i]} * ys[i] % modulus;
      consistent = acc % modulus == ys[t + 1 + m];
    }
    std::uint32_t value = 0;
    if (consistent) {
      std::uint64_t acc = 0;
      for (unsigned i = 0; i <= t; ++i) acc += std::uint64_t{at_zero[i]} * ys[i] % modulus;
      value = static_cast<std::uint32_t>(acc % modulus);
    } else {
      const auto poly = radius > 0 ? dec.decode(f, xs, ys, t, radius) : std::nullopt;
      if (!poly) {
        std::string names;
        for (auto s : suspected) names += (names.empty() ? "" : ",") + std::to_string(s);
        if (report) report->suspected.assign(suspected.begin(), suspected.end());
        fail(Errc::kRobustness, "word " + std::to_string(j) + " not decodable within " + std::to_string(radius) +
                                    " errors; suspected servers: " + (names.empty() ? "unidentified" : names));
      }
      for (std::size_t i = 0; i < k; ++i) {
        if (f.eval(*poly, xs[i]) != responses[i].values[j]) suspected.insert(responses[i].server);
      }
      value = (*poly)[0];
      ++corrected;
    }
    if (value >= (1u << w)) fail(Errc::kRobustness, "decoded word " + std::to_string(j) + " exceeds the word width");
    const std::size_t bit = j * w;
    out[bit / 8] |= static_cast<std::uint8_t>(value << (bit % 8));
  }
  if (report) {
    report->suspected.assign(suspected.begin(), suspected.end());
    report->corrected_words = corrected;
  }
  return out;
}

}  // namespace qpadl::pir
