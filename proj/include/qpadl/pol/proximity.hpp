#pragma once

namespace qpadl::pol {

// Log-distance path loss plus round-trip timing.
struct ProximityEnv {
  double path_loss_exponent = 2.0;
  double tx_power_dbm = 20.0;
  double ref_loss_db = 40.0;  // loss at the reference distance
  double ref_dist_m = 1.0;
  double c = 299792458.0;
};

inline constexpr double kDefaultProximityThreshold = 50.0;  // meters

// Mean of the RSS and RTT distance estimates, in meters. Non-finite input,
// negative rtt or non-positive environment constants are kInput.
double prox_verif(double rss_dbm, double rtt_s, const ProximityEnv& env = {});

// Forward model used by simulations: what an AP measures at distance d.
double expected_rss(double distance_m, const ProximityEnv& env = {});
double expected_rtt(double distance_m, const ProximityEnv& env = {});

}  // namespace qpadl::pol
