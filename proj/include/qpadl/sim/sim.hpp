#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "qpadl/onion/network.hpp"
#include "qpadl/sim/config.hpp"

namespace qpadl::sim {

// Protocol phases as numbered in the end-to-end flow.
enum class Phase : std::uint8_t {
  kSetup = 1,    // database build and puzzle binding
  kPol = 2,      // beacon, proximity check, ring signature
  kQuery = 3,    // PIR query, PSD response, reconstruction
  kToken = 4,    // puzzle check and proof of work
  kService = 5,  // token and PoL presented to the SAS
};

struct TranscriptEvent {
  Phase phase = Phase::kSetup;
  std::string step;
  std::int64_t actor = -1;  // client index, or -1 for the harness and attackers
  std::string detail;
};

// Wall time in microseconds, per client.
struct ClientTrace {
  std::uint32_t user = 0;
  std::uint64_t theta = 0;
  std::uint32_t ap = 0;
  std::uint32_t round = 0;
  double pol_us = 0;
  double query_us = 0;
  double response_us = 0;
  double reconstruct_us = 0;
  double solve_us = 0;
  double service_us = 0;
  std::uint64_t bytes_sent = 0;
  std::uint64_t bytes_received = 0;
  bool granted = false;
};

struct PhaseMetrics {
  double setup_us = 0;
  double pol_us = 0;
  double query_us = 0;
  double response_us = 0;
  double reconstruct_us = 0;
  double solve_us = 0;
  double service_us = 0;
  std::uint64_t bytes_on_wire = 0;
  std::uint64_t frames = 0;
  onion::SimTime network_time_us = 0;
  std::map<std::string, std::uint64_t> outcomes;
};

struct AttackResult {
  std::string name;
  std::string expected;
  std::string observed;
  bool ok() const { return expected == observed; }
};

struct SimReport {
  PhaseMetrics metrics;
  std::vector<ClientTrace> clients;
  std::vector<TranscriptEvent> events;
  std::vector<onion::FrameRecord> frames;
  std::map<onion::NodeId, std::string> roles;  // hop attribution for frames
  Digest network_digest{};
  Digest transcript_digest{};  // network digest chained with the events
  std::uint32_t honest_granted = 0;
  std::vector<AttackResult> attacks;
  std::uint32_t flood_accepted = 0;
  std::uint32_t flood_rate_limited = 0;
  std::vector<unsigned> byzantine_suspected;
  std::vector<std::string> failures;  // violated run assertions

  bool ok() const { return failures.empty(); }
};

// Stands up the replicas, access points, relays and SAS, then runs every
// client through phases 2-5 plus the configured attacks. Config errors are
// Errc::kUsage.
SimReport run_sim(const SimConfig& config);

// One CSV per phase plus summary.csv, attacks.csv and frames.csv.
void write_csv(const SimReport& report, const std::string& dir);

std::string phase_name(Phase p);

}  // namespace qpadl::sim
