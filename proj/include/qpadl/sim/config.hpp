#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "qpadl/common/types.hpp"
#include "qpadl/crypto/kem.hpp"
#include "qpadl/crypto/signature.hpp"

namespace qpadl::sim {

struct SimConfig {
  unsigned n_psd = 2;
  PirScheme scheme = PirScheme::kEns;
  PowKind pow = PowKind::kHct;
  std::uint32_t kappa = 8;  // HCT leading zeros, or LBP dimension
  std::uint64_t db_rows = 1024;
  std::uint32_t block_bytes = 3072;
  std::uint32_t n_users = 1;
  std::uint32_t ring_size = 128;
  std::uint64_t window_s = 60;  // beacon window
  std::uint64_t puzzle_window_s = 3600;
  std::uint64_t link_delay_us = 25000;
  std::uint64_t jitter_us = 0;
  unsigned workers = 4;
  std::uint64_t seed = 1;
  std::uint64_t start_s = 1700000000;

  unsigned ftr_t = 1;
  std::uint32_t ftr_modulus = 65537;
  unsigned oop_t = 0;  // 0 replicates fully
  std::uint32_t hct_leaves = 2;
  unsigned n_relays = 6;
  unsigned byzantine = 0;  // trailing FTR replicas that corrupt answers
  bool attacks = true;
  std::uint32_t flood = 100;  // queries sent by the flooder; 0 disables it
  bool shared_pol_log = false;
  double client_distance_m = 10;
  crypto::SignatureBackend signature = crypto::SignatureBackend::kMlDsa44;
  crypto::KemBackend kem = crypto::KemBackend::kMlKem768;
  std::string csv_dir;  // empty: no CSV output
};

// Flat "key = value" lines; '#' starts a comment. Errors are Errc::kUsage
// and name the offending key.
SimConfig parse_sim_config(std::string_view text);
SimConfig load_sim_config(const std::string& path);
std::string to_text(const SimConfig& config);
void validate(const SimConfig& config);

// Accepts decimal or 2^k.
std::uint64_t parse_count(std::string_view text);

}  // namespace qpadl::sim
