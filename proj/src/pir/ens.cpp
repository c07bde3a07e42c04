#include "qpadl/pir/ens.hpp"

#include <bit>
#include <string>

#include "qpadl/common/error.hpp"

namespace qpadl::pir {
namespace {

Bytes row_fold(const BitVector& share, const db::DbMatrix& db) {
  const std::size_t words = db.u64_per_row();
  std::vector<std::uint64_t> acc(words, 0);
  const auto& sw = share.words();
  for (std::size_t w = 0; w < sw.size(); ++w) {
    for (std::uint64_t bits = sw[w]; bits != 0; bits &= bits - 1) {
      const auto row = db.row(w * 64 + static_cast<std::size_t>(std::countr_zero(bits)));
      for (std::size_t k = 0; k < words; ++k) acc[k] ^= row[k];
    }
  }
  Bytes out(db.block_bytes());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<std::uint8_t>(acc[i / 8] >> (8 * (i % 8)));
  return out;
}

}  // namespace

EnsQuery ens_query_gen(std::uint64_t theta, std::uint64_t rows, unsigned servers, Rng& rng) {
  if (servers < 2) fail(Errc::kParameter, "ENS needs at least two servers");
  if (theta >= rows) fail(Errc::kParameter, "target index out of range");
  EnsQuery q;
  BitVector last = BitVector::unit(rows, theta);
  for (unsigned i = 0; i + 1 < servers; ++i) {
    q.shares.push_back(BitVector::random(rows, rng));
    last ^= q.shares.back();
  }
  q.shares.push_back(std::move(last));
  return q;
}

Bytes ens_respond(const BitVector& share, const db::DbMatrix& db) {
  if (share.size() != db.rows()) fail(Errc::kGeometry, "share length differs from row count");
  return row_fold(share, db);
}

std::vector<Bytes> ens_respond_batch(std::span<const BitVector> shares, const db::DbMatrix& db,
                                     const kernels::Kernel& kernel) {
  if (shares.size() == 1) return {ens_respond(shares[0], db)};
  kernels::BitMatrix q(shares.size(), db.rows());
  for (std::size_t i = 0; i < shares.size(); ++i) {
    if (shares[i].size() != db.rows()) fail(Errc::kGeometry, "share length differs from row count");
    std::copy(shares[i].words().begin(), shares[i].words().end(), q.row(i));
  }
  const auto out = kernel.gf2(q, kernels::Gf2DbView::of(db));
  std::vector<Bytes> result;
  result.reserve(shares.size());
  for (std::size_t i = 0; i < shares.size(); ++i) {
    Bytes b(db.block_bytes());
    const std::uint64_t* row = out.row(i);
    for (std::size_t k = 0; k < b.size(); ++k) b[k] = static_cast<std::uint8_t>(row[k / 8] >> (8 * (k % 8)));
    result.push_back(std::move(b));
  }
  return result;
}

Bytes ens_reconstruct(std::span<const std::optional<Bytes>> responses) {
  if (responses.empty()) fail(Errc::kIncomplete, "no responses");
  Bytes out;
  for (std::size_t i = 0; i < responses.size(); ++i) {
    if (!responses[i]) fail(Errc::kIncomplete, "missing response from server " + std::to_string(i));
    if (i == 0) {
      out = *responses[i];
    } else {
      xor_into(out, *responses[i]);
    }
  }
  return out;
}

}  // namespace qpadl::pir
