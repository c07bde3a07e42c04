#pragma once

#include <optional>
#include <span>
#include <vector>

#include "qpadl/db/matrix.hpp"
#include "qpadl/kernels/kernels.hpp"
#include "qpadl/pir/bitvec.hpp"

namespace qpadl::pir {

// XOR secret-shared selection vector, one share per server.
struct EnsQuery {
  std::vector<BitVector> shares;
};

// The first l-1 shares are uniform; the last one closes the XOR to e_theta.
EnsQuery ens_query_gen(std::uint64_t theta, std::uint64_t rows, unsigned servers, Rng& rng);

// XOR of the rows selected by the share.
Bytes ens_respond(const BitVector& share, const db::DbMatrix& db);

// Several shares against one database through a kernel backend.
std::vector<Bytes> ens_respond_batch(std::span<const BitVector> shares, const db::DbMatrix& db,
                                     const kernels::Kernel& kernel);

// Needs every server's answer; a missing one is kIncomplete.
Bytes ens_reconstruct(std::span<const std::optional<Bytes>> responses);

}  // namespace qpadl::pir
