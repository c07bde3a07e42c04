#include "qpadl/pow/hct.hpp"

#include <openssl/evp.h>

#include <bit>
#include <cstring>

#include "qpadl/common/error.hpp"
#include "qpadl/crypto/hash.hpp"

namespace qpadl::pow {
namespace {

thread_local std::uint64_t t_hash_calls = 0;

constexpr std::size_t kPreimageBytes = 32 + 4 + 32 + 32 + 8;

// Preimage n_s || i || left || right || nonce with a mutable nonce tail.
struct NodePreimage {
  std::array<std::uint8_t, kPreimageBytes> buf{};

  NodePreimage(const HctPuzzle& p, std::uint32_t index, const Digest& left, const Digest& right) {
    std::memcpy(buf.data(), p.nonce_seed.data(), 32);
    for (int i = 0; i < 4; ++i) buf[32 + i] = static_cast<std::uint8_t>(index >> (8 * i));
    std::memcpy(buf.data() + 36, left.data(), 32);
    std::memcpy(buf.data() + 68, right.data(), 32);
  }

  Digest hash(std::uint64_t nonce) {
    for (int i = 0; i < 8; ++i) buf[100 + i] = static_cast<std::uint8_t>(nonce >> (8 * i));
    ++t_hash_calls;
    Digest out{};
    unsigned int len = 0;
    EVP_Digest(buf.data(), buf.size(), out.data(), &len, EVP_sha256(), nullptr);
    return out;
  }
};

const Digest kZeroDigest{};

bool meets(const Digest& d, std::uint32_t difficulty) {
  return static_cast<std::uint32_t>(crypto::leading_zero_bits(d)) >= difficulty;
}

}  // namespace

std::uint32_t HctPuzzle::depth() const { return static_cast<std::uint32_t>(std::countr_zero(leaves)); }

Bytes HctPuzzle::serialize() const {
  ByteWriter w(kSerializedBytes);
  w.raw(nonce_seed);
  w.u32(difficulty);
  w.u8(leaves);
  return std::move(w).take();
}

HctPuzzle HctPuzzle::deserialize(ByteSpan data) {
  if (data.size() != kSerializedBytes) fail(Errc::kFormat, "HCT puzzle must be 37 bytes");
  ByteReader r(data);
  HctPuzzle p;
  p.nonce_seed = r.array<32>();
  p.difficulty = r.u32();
  p.leaves = r.u8();
  if (p.leaves < 2 || !std::has_single_bit(p.leaves)) fail(Errc::kFormat, "HCT leaf count");
  if (p.difficulty > 256) fail(Errc::kFormat, "HCT difficulty");
  return p;
}

double HctSolution::mean_leaf_attempts(std::uint32_t leaves) const {
  double sum = 0;
  for (std::uint32_t i = leaves; i < 2 * leaves; ++i) sum += static_cast<double>(attempts.at(i));
  return sum / leaves;
}

Bytes HctPath::serialize() const {
  ByteWriter w;
  w.u32(leaf);
  w.u8(static_cast<std::uint8_t>(nodes.size()));
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    w.u32(nodes[i].index);
    w.u64(nodes[i].nonce);
    if (i > 0) w.raw(nodes[i].sibling);
  }
  return std::move(w).take();
}

HctPath HctPath::deserialize(ByteSpan data) {
  ByteReader r(data);
  HctPath p;
  p.leaf = r.u32();
  std::size_t n = r.u8();
  for (std::size_t i = 0; i < n; ++i) {
    HctPathNode node;
    node.index = r.u32();
    node.nonce = r.u64();
    if (i > 0) node.sibling = r.array<32>();
    p.nodes.push_back(node);
  }
  r.expect_end();
  return p;
}

Bytes HctProof::serialize() const {
  ByteWriter w;
  w.u64(root_nonce);
  w.raw(path.serialize());
  return std::move(w).take();
}

HctProof HctProof::deserialize(ByteSpan data) {
  ByteReader r(data);
  HctProof p;
  p.root_nonce = r.u64();
  p.path = HctPath::deserialize(r.raw(r.remaining()));
  return p;
}

Digest hct_node_hash(const HctPuzzle& puzzle, std::uint32_t index, const Digest& left,
                     const Digest& right, std::uint64_t nonce) {
  NodePreimage pre(puzzle, index, left, right);
  return pre.hash(nonce);
}

std::uint64_t hct_hash_invocations() { return t_hash_calls; }

HctPuzzle hct_gen(std::uint32_t lambda_bits, std::uint32_t difficulty, std::uint32_t leaves, Rng& rng) {
  if (lambda_bits != 256) fail(Errc::kParameter, "HCT nonce seed must be 256 bits");
  if (leaves < 2 || leaves > 128 || !std::has_single_bit(leaves)) {
    fail(Errc::kParameter, "HCT leaf count must be a power of two in [2, 128]");
  }
  if (difficulty > 64) fail(Errc::kParameter, "HCT difficulty above 64 bits");
  HctPuzzle p;
  rng.fill(p.nonce_seed);
  p.difficulty = difficulty;
  p.leaves = static_cast<std::uint8_t>(leaves);
  return p;
}

HctSolution hct_solve(const HctPuzzle& puzzle, const HctSolveOptions& options) {
  const std::uint32_t nodes = puzzle.node_count();
  HctSolution sol;
  sol.nonces.assign(nodes + 1, 0);
  sol.digests.assign(nodes + 1, Digest{});
  sol.attempts.assign(nodes + 1, 0);

  SystemRng fallback;
  Rng& rng = options.rng != nullptr ? *options.rng : static_cast<Rng&>(fallback);

  // Descending heap order visits every child before its parent.
  for (std::uint32_t i = nodes; i >= 1; --i) {
    const bool leaf = i >= puzzle.leaves;
    NodePreimage pre(puzzle, i, leaf ? kZeroDigest : sol.digests[2 * i],
                     leaf ? kZeroDigest : sol.digests[2 * i + 1]);
    std::uint64_t nonce = options.counter_start ? *options.counter_start : rng.next_u64();
    std::uint64_t tries = 0;
    for (;;) {
      ++tries;
      Digest d = pre.hash(nonce);
      if (meets(d, puzzle.difficulty)) {
        sol.nonces[i] = nonce;
        sol.digests[i] = d;
        break;
      }
      ++nonce;
    }
    sol.attempts[i] = tries;
  }
  return sol;
}

HctPath hct_open(const HctPuzzle& puzzle, const HctSolution& solution, std::uint32_t leaf) {
  if (leaf >= puzzle.leaves) fail(Errc::kParameter, "HCT leaf index out of range");
  HctPath path;
  path.leaf = leaf;
  std::uint32_t node = puzzle.leaves + leaf;
  path.nodes.push_back({node, solution.nonces.at(node), {}});
  while (node > 1) {
    const std::uint32_t sibling = node ^ 1u;
    node >>= 1;
    path.nodes.push_back({node, solution.nonces.at(node), solution.digests.at(sibling)});
  }
  return path;
}

HctVerdict hct_verify_path(const HctPuzzle& puzzle, std::uint64_t root_nonce, const HctPath& path) {
  HctVerdict v;
  const std::uint64_t before = t_hash_calls;
  auto done = [&](bool ok, std::optional<std::uint32_t> failed) {
    v.accepted = ok;
    v.failed_node = failed;
    v.hash_calls = t_hash_calls - before;
    return v;
  };

  if (path.leaf >= puzzle.leaves || path.nodes.size() != puzzle.depth() + 1) {
    return done(false, std::nullopt);
  }
  std::uint32_t expected = puzzle.leaves + path.leaf;
  Digest current{};
  for (std::size_t k = 0; k < path.nodes.size(); ++k) {
    const auto& node = path.nodes[k];
    if (node.index != expected) return done(false, expected);
    if (k == 0) {
      current = hct_node_hash(puzzle, node.index, kZeroDigest, kZeroDigest, node.nonce);
    } else {
      const std::uint32_t child = path.nodes[k - 1].index;
      const bool child_is_left = (child & 1u) == 0;
      current = child_is_left ? hct_node_hash(puzzle, node.index, current, node.sibling, node.nonce)
                              : hct_node_hash(puzzle, node.index, node.sibling, current, node.nonce);
    }
    if (!meets(current, puzzle.difficulty)) return done(false, node.index);
    expected >>= 1;
  }
  if (path.nodes.back().nonce != root_nonce) return done(false, 1u);
  return done(true, std::nullopt);
}

HctVerdict hct_verify(const HctPuzzle& puzzle, std::uint64_t root_nonce,
                      const HctPathProvider& provider, Rng& rng) {
  const auto leaf = static_cast<std::uint32_t>(rng.uniform_below(puzzle.leaves));
  HctPath path = provider(leaf);
  if (path.leaf != leaf) return {false, puzzle.leaves + leaf, 0};
  return hct_verify_path(puzzle, root_nonce, path);
}

std::uint32_t hct_challenge_leaf(const HctPuzzle& puzzle, std::uint64_t root_nonce, ByteSpan context) {
  crypto::Sha256 h;
  h.update("hct-challenge").update(puzzle.nonce_seed).update_u64(root_nonce).update(context);
  Digest d = h.finish();
  std::uint32_t x = 0;
  for (int i = 0; i < 4; ++i) x |= std::uint32_t{d[i]} << (8 * i);
  return x % puzzle.leaves;
}

HctProof hct_prove(const HctPuzzle& puzzle, const HctSolution& solution, ByteSpan context) {
  HctProof proof;
  proof.root_nonce = solution.root_nonce();
  proof.path = hct_open(puzzle, solution, hct_challenge_leaf(puzzle, proof.root_nonce, context));
  return proof;
}

HctVerdict hct_verify_noninteractive(const HctPuzzle& puzzle, const HctProof& proof, ByteSpan context) {
  if (proof.path.leaf != hct_challenge_leaf(puzzle, proof.root_nonce, context)) {
    return {false, std::nullopt, 0};
  }
  return hct_verify_path(puzzle, proof.root_nonce, proof.path);
}

}  // namespace qpadl::pow
