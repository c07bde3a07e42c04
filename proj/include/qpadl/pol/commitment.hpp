#pragma once

#include <array>
#include <cstdint>

#include "qpadl/common/bytes.hpp"
#include "qpadl/common/rng.hpp"

namespace qpadl::pol {

using BeaconNonce = std::array<std::uint8_t, 8>;
using CommitNonce = std::array<std::uint8_t, 4>;

// Grid position of the prover.
struct Location {
  std::uint64_t x = 0;
  std::uint64_t y = 0;
  bool operator==(const Location&) const = default;
};

// Per-window broadcast of an access point.
struct Beacon {
  std::uint32_t ap = 0;       // broadcast id
  std::uint64_t window = 0;   // TS
  BeaconNonce nonce{};        // beta_TS
  bool operator==(const Beacon&) const = default;
};

struct Opening {
  Location location;
  BeaconNonce beacon_nonce{};
  std::uint64_t window = 0;
  CommitNonce r{};
  bool operator==(const Opening&) const = default;
};

struct LocationCommitment {
  Digest digest{};
  Opening opening;
};

// SHA-256 of x | y | beta | TS | r (integers little-endian, 36 bytes).
Digest commitment_digest(const Opening& opening);
LocationCommitment commit_location(const Location& location, const Beacon& beacon, Rng& rng);
bool verify_opening(const Digest& digest, const Opening& opening);

Bytes encode_opening(const Opening& opening);
Opening decode_opening(ByteSpan data);

}  // namespace qpadl::pol
