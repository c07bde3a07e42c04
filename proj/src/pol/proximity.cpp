#include "qpadl/pol/proximity.hpp"

#include <cmath>

#include "qpadl/common/error.hpp"

namespace qpadl::pol {
namespace {

void check_env(const ProximityEnv& env) {
  for (double v : {env.path_loss_exponent, env.ref_dist_m, env.c}) {
    if (!std::isfinite(v) || v <= 0) fail(Errc::kInput, "environment constants must be finite and positive");
  }
  if (!std::isfinite(env.tx_power_dbm) || !std::isfinite(env.ref_loss_db)) {
    fail(Errc::kInput, "environment constants must be finite");
  }
}

}  // namespace

double prox_verif(double rss_dbm, double rtt_s, const ProximityEnv& env) {
  check_env(env);
  if (!std::isfinite(rss_dbm) || !std::isfinite(rtt_s)) fail(Errc::kInput, "non-finite measurement");
  if (rtt_s < 0) fail(Errc::kInput, "negative round-trip time");
  const double d_rss =
      env.ref_dist_m * std::pow(10.0, (env.tx_power_dbm - env.ref_loss_db - rss_dbm) / (10.0 * env.path_loss_exponent));
  const double d_rtt = rtt_s * env.c / 2.0;
  return (d_rss + d_rtt) / 2.0;
}

double expected_rss(double distance_m, const ProximityEnv& env) {
  check_env(env);
  if (!std::isfinite(distance_m) || distance_m <= 0) fail(Errc::kInput, "distance must be positive");
  return env.tx_power_dbm - env.ref_loss_db - 10.0 * env.path_loss_exponent * std::log10(distance_m / env.ref_dist_m);
}

double expected_rtt(double distance_m, const ProximityEnv& env) {
  check_env(env);
  if (!std::isfinite(distance_m) || distance_m < 0) fail(Errc::kInput, "distance must be non-negative");
  return 2.0 * distance_m / env.c;
}

}  // namespace qpadl::pol
