#pragma once

#include <atomic>
#include <memory>
#include <optional>

#include "qpadl/pol/commitment.hpp"
#include "qpadl/pol/lrs.hpp"
#include "qpadl/pol/proximity.hpp"

namespace qpadl::pol {

inline constexpr std::uint64_t kBeaconPeriodSeconds = 60;

inline std::uint64_t beacon_window_at(std::uint64_t seconds) { return seconds / kBeaconPeriodSeconds; }

// Ring signature by an access point over (commitment, window).
struct ProofOfLocation {
  Digest commitment{};
  std::uint64_t window = 0;
  LrsSignature signature;

  // C | e_ID | T | rt | u32 proof length | proof | u64 TS
  Bytes encode() const;
  static ProofOfLocation decode(ByteSpan data);
  bool operator==(const ProofOfLocation& o) const;
};

// Signed message: C_TS | u64 TS.
Bytes pol_message(const Digest& commitment, std::uint64_t window);

// Request as it reaches the access point, with the radio measurements the
// access point takes of the sender.
struct PolRequest {
  Beacon beacon;
  Digest commitment{};
  double rss_dbm = 0;
  double rtt_s = 0;
};

enum class PolStatus { kAccepted, kStaleBeacon, kTooFar };

struct PolOutcome {
  PolStatus status = PolStatus::kStaleBeacon;
  double distance_m = 0;  // set once proximity was evaluated
  std::optional<ProofOfLocation> proof;
};

struct AccessPointConfig {
  std::uint32_t id = 0;
  ProximityEnv env;
  double threshold_m = kDefaultProximityThreshold;
};

// One ring member issuing proofs. Beacon state has a single writer.
class AccessPoint {
 public:
  AccessPoint(AccessPointConfig config, LrsKeyPair keys, std::shared_ptr<const RingContext> ring,
              std::shared_ptr<const SokBackend> backend);

  // Starts a new window with a fresh nonce and returns its beacon.
  const Beacon& advance(std::uint64_t window, Rng& rng);
  const std::optional<Beacon>& latest() const { return latest_; }

  PolOutcome respond(const PolRequest& request, Rng& rng);

  std::uint32_t id() const { return config_.id; }
  const Digest& public_key() const { return keys_.public_key; }
  std::uint64_t proximity_checks() const { return proximity_checks_; }

 private:
  AccessPointConfig config_;
  LrsKeyPair keys_;
  std::shared_ptr<const RingContext> ring_;
  std::shared_ptr<const SokBackend> backend_;
  std::optional<Beacon> latest_;
  std::uint64_t proximity_checks_ = 0;
};

// Client side: commit to the location under the heard beacon.
struct PolClientState {
  PolRequest request;
  LocationCommitment commitment;
};
PolClientState pol_request(const Location& location, const Beacon& beacon, double rss_dbm, double rtt_s, Rng& rng);

PolOutcome pol_respond(AccessPoint& ap, const PolRequest& request, Rng& rng);

// Checks the ring signature over the proof's own commitment and window.
bool pol_verify(const ProofOfLocation& proof, const RingContext& ring, const SokBackend& backend);

}  // namespace qpadl::pol
