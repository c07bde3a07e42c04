#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "qpadl/common/bytes.hpp"
#include "qpadl/common/rng.hpp"

namespace qpadl::pow {

// Hashcash tree puzzle (h, n_s, kappa, n_l). The hash is fixed to SHA-256, so
// the wire form carries only n_s || kappa || n_l.
struct HctPuzzle {
  static constexpr std::size_t kSerializedBytes = 37;

  Digest nonce_seed{};
  std::uint32_t difficulty = 0;  // required leading zero bits per node
  std::uint8_t leaves = 2;       // n_l, a power of two >= 2

  std::uint32_t node_count() const { return 2u * leaves - 1u; }
  std::uint32_t depth() const;  // log2(n_l)

  Bytes serialize() const;
  static HctPuzzle deserialize(ByteSpan data);
  bool operator==(const HctPuzzle&) const = default;
};

// Nonces and digests for every node, heap-indexed: root is 1, children of i
// are 2i and 2i+1, leaves occupy [n_l, 2 n_l).
struct HctSolution {
  std::vector<std::uint64_t> nonces;   // index 0 unused
  std::vector<Digest> digests;         // index 0 unused
  std::vector<std::uint64_t> attempts; // hash attempts spent per node

  std::uint64_t root_nonce() const { return nonces.at(1); }
  double mean_leaf_attempts(std::uint32_t leaves) const;
};

struct HctPathNode {
  std::uint32_t index = 0;
  std::uint64_t nonce = 0;
  Digest sibling{};  // digest of the child not on the path; unused for the leaf
};

// Leaf-to-root opening of one challenged leaf.
struct HctPath {
  std::uint32_t leaf = 0;
  std::vector<HctPathNode> nodes;  // nodes[0] is the leaf, back() is the root

  Bytes serialize() const;
  static HctPath deserialize(ByteSpan data);
};

// Non-interactive proof: committed root nonce plus the opening of the leaf
// derived from it.
struct HctProof {
  std::uint64_t root_nonce = 0;
  HctPath path;

  Bytes serialize() const;
  static HctProof deserialize(ByteSpan data);
};

struct HctVerdict {
  bool accepted = false;
  std::optional<std::uint32_t> failed_node;
  std::uint64_t hash_calls = 0;
};

struct HctSolveOptions {
  // Start every node's counter here; std::nullopt draws a random start.
  std::optional<std::uint64_t> counter_start = 0;
  Rng* rng = nullptr;
};

HctPuzzle hct_gen(std::uint32_t lambda_bits, std::uint32_t difficulty, std::uint32_t leaves, Rng& rng);

// Solves children before parents.
HctSolution hct_solve(const HctPuzzle& puzzle, const HctSolveOptions& options = {});

HctPath hct_open(const HctPuzzle& puzzle, const HctSolution& solution, std::uint32_t leaf);

using HctPathProvider = std::function<HctPath(std::uint32_t leaf)>;

// Interactive check: the verifier picks a leaf with `rng` and asks the prover
// for its path.
HctVerdict hct_verify(const HctPuzzle& puzzle, std::uint64_t root_nonce,
                      const HctPathProvider& provider, Rng& rng);

// Checks a single path against the committed root nonce.
HctVerdict hct_verify_path(const HctPuzzle& puzzle, std::uint64_t root_nonce, const HctPath& path);

// Fiat-Shamir variant: the challenged leaf is derived from the root nonce and
// a caller-chosen context.
std::uint32_t hct_challenge_leaf(const HctPuzzle& puzzle, std::uint64_t root_nonce, ByteSpan context);
HctProof hct_prove(const HctPuzzle& puzzle, const HctSolution& solution, ByteSpan context);
HctVerdict hct_verify_noninteractive(const HctPuzzle& puzzle, const HctProof& proof, ByteSpan context);

// Node hash h(n_s || i || left || right || nonce); leaves pass zero digests.
Digest hct_node_hash(const HctPuzzle& puzzle, std::uint32_t index, const Digest& left,
                     const Digest& right, std::uint64_t nonce);

// Running count of hct_node_hash calls on this thread (instrumentation).
std::uint64_t hct_hash_invocations();

}  // namespace qpadl::pow
