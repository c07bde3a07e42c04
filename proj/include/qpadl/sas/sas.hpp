#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include "qpadl/common/bytes.hpp"
#include "qpadl/crypto/signature.hpp"
#include "qpadl/db/block.hpp"
#include "qpadl/pol/pol.hpp"
#include "qpadl/pow/hct.hpp"
#include "qpadl/pow/lbp.hpp"

namespace qpadl::sas {

// (Pi, sigma_Pi, Psi). The token carries the whole signed puzzle section of
// row theta and names the puzzle that was solved.
struct Token {
  std::uint64_t theta = 0;
  std::uint64_t validity_window = 0;
  std::vector<db::BoundPuzzle> puzzles;
  std::uint8_t solved = 0;  // index into puzzles
  Bytes issuer_sig;
  Bytes solution;

  const db::BoundPuzzle& puzzle() const;

  // u64 theta | u64 window | puzzle section | u8 solved | u16 sig length |
  // sig | u32 solution length | solution
  Bytes encode() const;
  static Token decode(ByteSpan data);
  bool operator==(const Token&) const = default;
};

// Fiat-Shamir context binding an HCT proof to the token's signed fields.
Bytes token_context(std::uint64_t theta, std::uint64_t validity_window, const db::BoundPuzzle& puzzle);

// Replay-log key: H(Pi | Psi). LBP solutions are sign-normalised first so v
// and -v count as one solution.
Digest token_digest(const Token& token);

struct TokenOptions {
  std::size_t puzzle_index = 0;
  pow::HctSolveOptions hct;
  pow::LbpSolveOptions lbp;
};

// Client side. The issuer signature is checked before any work is spent: a
// bad or stale signature throws Errc::kProtocol without solving.
Token create_token(const db::DbEntryBlock& block, std::uint64_t theta, const crypto::SignatureScheme& scheme,
                   ByteSpan psd_public_key, std::uint64_t current_window, const TokenOptions& options = {});

// Checks the solution against the named puzzle.
bool token_pow_verify(const Token& token);

enum class Outcome : std::uint8_t { kGranted = 1, kRejected = 2 };

// Stage that decided the request; kNone on a grant.
enum class Stage : std::uint8_t {
  kNone = 0,
  kSignature = 1,
  kPow = 2,
  kReplay = 3,
  kPol = 4,
  kOpening = 5,
  kFormat = 6,
};

std::string_view stage_name(Stage s) noexcept;

struct ServiceDecision {
  Outcome outcome = Outcome::kRejected;
  Stage stage = Stage::kFormat;
  Digest token_digest{};  // set once the token decoded

  bool granted() const { return outcome == Outcome::kGranted; }
  // u8 outcome | u8 stage
  Bytes encode() const;
  static ServiceDecision decode(ByteSpan data);
};

// token | PoL | commitment | u8 has opening | opening
struct ServiceRequest {
  Token token;
  pol::ProofOfLocation pol;
  Digest commitment{};
  std::optional<pol::Opening> opening;

  Bytes encode() const;
  static ServiceRequest decode(ByteSpan data);
};

struct SasConfig {
  std::uint64_t beacon_seconds = pol::kBeaconPeriodSeconds;
  std::uint64_t puzzle_window_seconds = 3600;
  // Policy floor on the bound difficulty; 0 accepts whatever the PSD bound.
  std::uint32_t min_difficulty = 0;
  bool require_opening = false;
};

struct SasCounters {
  std::uint64_t signature_checks = 0;
  std::uint64_t pow_verifications = 0;
  std::uint64_t pol_verifications = 0;
};

class SasServer {
 public:
  SasServer(SasConfig config, std::shared_ptr<const crypto::SignatureScheme> scheme, Bytes psd_public_key,
            std::shared_ptr<const pol::RingContext> ring, std::shared_ptr<const pol::SokBackend> sok);

  // Moves the clock and purges replay entries from past puzzle windows.
  void advance(std::uint64_t now_seconds);

  ServiceDecision handle_service_request(const ServiceRequest& request);
  Bytes handle_frame(ByteSpan frame);

  struct LoggedDecision {
    ServiceDecision decision;
    bool token_was_new = false;  // replay-log insert succeeded
  };
  const std::vector<LoggedDecision>& decision_log() const { return decisions_; }
  const SasCounters& counters() const { return counters_; }
  std::size_t replay_log_size() const;
  std::uint64_t beacon_window() const { return beacon_window_; }
  std::uint64_t puzzle_window() const { return puzzle_window_; }

 private:
  ServiceDecision decide(const ServiceRequest& request, bool& token_was_new);
  // Atomic test-and-set; false when the digest was already recorded.
  bool record_token(const Digest& digest, std::uint64_t window);

  SasConfig config_;
  std::shared_ptr<const crypto::SignatureScheme> scheme_;
  Bytes psd_public_key_;
  std::shared_ptr<const pol::RingContext> ring_;
  std::shared_ptr<const pol::SokBackend> sok_;
  std::uint64_t beacon_window_ = 0;
  std::uint64_t puzzle_window_ = 0;
  mutable std::mutex replay_mu_;
  std::map<Digest, std::uint64_t> replay_;  // digest -> puzzle window
  std::vector<LoggedDecision> decisions_;
  SasCounters counters_;
};

}  // namespace qpadl::sas
