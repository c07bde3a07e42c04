#pragma once

#include <optional>
#include <span>
#include <vector>

#include "qpadl/db/matrix.hpp"
#include "qpadl/kernels/kernels.hpp"
#include "qpadl/pir/field.hpp"

namespace qpadl::pir {

inline constexpr std::uint32_t kDefaultFtrModulus = 65537;

// Blocks are read as little-endian words of this many bits: the largest power
// of two not above min(8, floor(log2 p)), so every word is a field element.
unsigned ftr_word_bits(std::uint32_t modulus);
std::size_t ftr_words_per_block(const db::DbMatrix& db, std::uint32_t modulus);

// Server i evaluates at i + 1.
inline std::uint32_t ftr_eval_point(unsigned server) { return server + 1; }

struct FtrQuery {
  std::vector<std::vector<std::uint32_t>> per_server;  // l vectors of r elements
  std::vector<std::uint32_t> eval_points;
  unsigned t = 0;
  std::uint32_t modulus = kDefaultFtrModulus;
};

// Row j is shared with a random degree-t polynomial whose constant term is
// e_theta[j].
FtrQuery ftr_query_gen(std::uint64_t theta, std::uint64_t rows, unsigned servers, unsigned t, std::uint32_t modulus,
                       Rng& rng);

std::vector<std::uint32_t> ftr_respond(std::span<const std::uint32_t> query, const db::DbMatrix& db,
                                       std::uint32_t modulus);
std::vector<std::vector<std::uint32_t>> ftr_respond_batch(std::span<const std::vector<std::uint32_t>> queries,
                                                          const db::DbMatrix& db, std::uint32_t modulus,
                                                          const kernels::Kernel& kernel);

struct FtrResponse {
  unsigned server = 0;
  std::vector<std::uint32_t> values;
};

// Recovers a polynomial of degree <= t from points of which at most
// max_errors are wrong. Coefficients come back lowest degree first.
class FtrDecoder {
 public:
  virtual ~FtrDecoder() = default;
  virtual std::optional<std::vector<std::uint32_t>> decode(const PrimeField& field, std::span<const std::uint32_t> xs,
                                                           std::span<const std::uint32_t> ys, unsigned t,
                                                           unsigned max_errors) const = 0;
};

// Unique decoding up to floor((k - t - 1) / 2) errors.
class BerlekampWelchDecoder final : public FtrDecoder {
 public:
  std::optional<std::vector<std::uint32_t>> decode(const PrimeField& field, std::span<const std::uint32_t> xs,
                                                   std::span<const std::uint32_t> ys, unsigned t,
                                                   unsigned max_errors) const override;
};

inline unsigned ftr_unique_radius(std::size_t k, unsigned t) {
  return k > t ? static_cast<unsigned>((k - t - 1) / 2) : 0;
}

struct FtrDecodeReport {
  std::vector<unsigned> suspected;  // servers that disagreed with a decoded word
  std::size_t corrected_words = 0;
};

// Needs at least t+1 responses (kIncomplete otherwise). Words consistent
// with one polynomial take the Lagrange path; others go to the decoder, and
// an undecodable word is kRobustness. max_errors is capped at the unique
// decoding radius.
Bytes ftr_reconstruct(std::span<const FtrResponse> responses, unsigned t, std::uint32_t modulus,
                      std::optional<unsigned> max_errors = std::nullopt, FtrDecodeReport* report = nullptr,
                      const FtrDecoder* decoder = nullptr);

}  // namespace qpadl::pir
