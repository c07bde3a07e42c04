#include "qpadl/sim/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "qpadl/common/error.hpp"
#include "qpadl/pir/field.hpp"
#include "qpadl/pir/ftr.hpp"

namespace qpadl::sim {
namespace {

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

std::uint64_t parse_plain(std::string_view text) {
  std::uint64_t v = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || text.empty()) fail(Errc::kUsage, "not an unsigned integer: '" + std::string(text) + "'");
  return v;
}

double parse_real(std::string_view text) {
  double v = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || text.empty()) fail(Errc::kUsage, "not a number: '" + std::string(text) + "'");
  return v;
}

bool parse_bool(std::string_view text) {
  if (text == "1" || text == "true" || text == "yes" || text == "on") return true;
  if (text == "0" || text == "false" || text == "no" || text == "off") return false;
  fail(Errc::kUsage, "not a boolean: '" + std::string(text) + "'");
}

template <class T>
T narrow(std::uint64_t v) {
  if (v > std::numeric_limits<T>::max()) fail(Errc::kUsage, "value too large");
  return static_cast<T>(v);
}

using Setter = std::function<void(SimConfig&, std::string_view)>;

template <class T>
Setter count(T SimConfig::*field) {
  return [field](SimConfig& c, std::string_view v) { c.*field = narrow<T>(parse_count(v)); };
}

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = {
      {"n_psd", count(&SimConfig::n_psd)},
      {"scheme", [](SimConfig& c, std::string_view v) { c.scheme = parse_scheme(v); }},
      {"pow", [](SimConfig& c, std::string_view v) { c.pow = parse_pow(v); }},
      {"kappa", count(&SimConfig::kappa)},
      {"db_rows", count(&SimConfig::db_rows)},
      {"block_bytes", count(&SimConfig::block_bytes)},
      {"n_users", count(&SimConfig::n_users)},
      {"ring_size", count(&SimConfig::ring_size)},
      {"window_s", count(&SimConfig::window_s)},
      {"puzzle_window_s", count(&SimConfig::puzzle_window_s)},
      {"link_delay_us", count(&SimConfig::link_delay_us)},
      {"jitter_us", count(&SimConfig::jitter_us)},
      {"workers", count(&SimConfig::workers)},
      {"seed", count(&SimConfig::seed)},
      {"start_s", count(&SimConfig::start_s)},
      {"ftr_t", count(&SimConfig::ftr_t)},
      {"ftr_modulus", count(&SimConfig::ftr_modulus)},
      {"oop_t", count(&SimConfig::oop_t)},
      {"hct_leaves", count(&SimConfig::hct_leaves)},
      {"n_relays", count(&SimConfig::n_relays)},
      {"byzantine", count(&SimConfig::byzantine)},
      {"attacks", [](SimConfig& c, std::string_view v) { c.attacks = parse_bool(v); }},
      {"flood", count(&SimConfig::flood)},
      {"shared_pol_log", [](SimConfig& c, std::string_view v) { c.shared_pol_log = parse_bool(v); }},
      {"client_distance_m", [](SimConfig& c, std::string_view v) { c.client_distance_m = parse_real(v); }},
      {"signature",
       [](SimConfig& c, std::string_view v) {
         if (v == "ml-dsa") {
           c.signature = crypto::SignatureBackend::kMlDsa44;
         } else if (v == "stub") {
           c.signature = crypto::SignatureBackend::kStub;
         } else {
           fail(Errc::kUsage, "expected ml-dsa or stub");
         }
       }},
      {"kem",
       [](SimConfig& c, std::string_view v) {
         if (v == "ml-kem") {
           c.kem = crypto::KemBackend::kMlKem768;
         } else if (v == "stub") {
           c.kem = crypto::KemBackend::kStub;
         } else {
           fail(Errc::kUsage, "expected ml-kem or stub");
         }
       }},
      {"csv_dir", [](SimConfig& c, std::string_view v) { c.csv_dir = std::string(v); }},
  };
  return table;
}

[[noreturn]] void bad_field(const char* field, const std::string& why) {
  fail(Errc::kUsage, std::string(field) + ": " + why);
}

}  // namespace

std::uint64_t parse_count(std::string_view text) {
  text = trim(text);
  if (auto caret = text.find('^'); caret != std::string_view::npos) {
    const auto base = parse_plain(text.substr(0, caret));
    const auto exp = parse_plain(text.substr(caret + 1));
    if (base != 2 || exp > 62) fail(Errc::kUsage, "powers must be 2^k with k <= 62");
    return std::uint64_t{1} << exp;
  }
  return parse_plain(text);
}

SimConfig parse_sim_config(std::string_view text) {
  SimConfig c;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    auto line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      fail(Errc::kUsage, "line " + std::to_string(line_no) + ": expected key = value");
    }
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) fail(Errc::kUsage, "unknown key '" + std::string(key) + "'");
    try {
      it->second(c, value);
    } catch (const Error& e) {
      fail(Errc::kUsage, std::string(key) + ": " + e.what());
    }
  }
  validate(c);
  return c;
}

SimConfig load_sim_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::kUsage, "cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_sim_config(ss.str());
}

void validate(const SimConfig& c) {
  if (c.n_psd < 2) bad_field("n_psd", "need at least 2 replicas");
  if (c.n_psd > 255) bad_field("n_psd", "at most 255 replicas");
  if (c.scheme == PirScheme::kNone) bad_field("scheme", "must be ens, ftr or oop");
  if (c.pow == PowKind::kNone) bad_field("pow", "must be hct or lbp");
  if (c.pow == PowKind::kHct && (c.kappa == 0 || c.kappa > 32)) bad_field("kappa", "HCT difficulty in 1..32");
  if (c.pow == PowKind::kLbp && (c.kappa < 2 || c.kappa > 48)) bad_field("kappa", "LBP dimension in 2..48");
  if (c.db_rows == 0 || c.db_rows > (1u << 24)) bad_field("db_rows", "must be in 1..2^24");
  if (c.block_bytes == 0 || c.block_bytes % 8 != 0) bad_field("block_bytes", "positive multiple of 8");
  if (c.n_users == 0) bad_field("n_users", "must be positive");
  if (c.n_users > c.db_rows) bad_field("n_users", "clients query distinct rows, so n_users <= db_rows");
  if (c.ring_size < 2 || (c.ring_size & (c.ring_size - 1)) != 0) bad_field("ring_size", "power of two >= 2");
  if (c.window_s == 0) bad_field("window_s", "must be positive");
  if (c.puzzle_window_s == 0 || c.puzzle_window_s % c.window_s != 0) {
    bad_field("puzzle_window_s", "positive multiple of window_s");
  }
  if (c.workers == 0) bad_field("workers", "must be positive");
  if (c.n_relays < 3) bad_field("n_relays", "a circuit needs 3 relays");
  if (c.hct_leaves < 2 || c.hct_leaves > 128 || (c.hct_leaves & (c.hct_leaves - 1)) != 0) {
    bad_field("hct_leaves", "power of two in 2..128");
  }
  if (c.scheme == PirScheme::kFtr) {
    if (c.ftr_t == 0 || c.ftr_t >= c.n_psd) bad_field("ftr_t", "need 0 < t < n_psd");
    if (!pir::is_prime(c.ftr_modulus) || c.ftr_modulus < 3 || c.ftr_modulus > (1u << 17)) {
      bad_field("ftr_modulus", "prime in 3..2^17");
    }
  }
  if (c.scheme == PirScheme::kOop && c.oop_t > c.n_psd) bad_field("oop_t", "at most n_psd");
  if (c.byzantine > 0) {
    if (c.scheme != PirScheme::kFtr) bad_field("byzantine", "only FTR tolerates corrupted replicas");
    if (c.byzantine >= c.n_psd) bad_field("byzantine", "must be below n_psd");
  }
  if (!(c.client_distance_m >= 0)) bad_field("client_distance_m", "must be non-negative");
}

std::string to_text(const SimConfig& c) {
  std::ostringstream o;
  o << "n_psd = " << c.n_psd << "\n"
    << "scheme = " << scheme_name(c.scheme) << "\n"
    << "pow = " << pow_name(c.pow) << "\n"
    << "kappa = " << c.kappa << "\n"
    << "db_rows = " << c.db_rows << "\n"
    << "block_bytes = " << c.block_bytes << "\n"
    << "n_users = " << c.n_users << "\n"
    << "ring_size = " << c.ring_size << "\n"
    << "window_s = " << c.window_s << "\n"
    << "puzzle_window_s = " << c.puzzle_window_s << "\n"
    << "link_delay_us = " << c.link_delay_us << "\n"
    << "jitter_us = " << c.jitter_us << "\n"
    << "workers = " << c.workers << "\n"
    << "seed = " << c.seed << "\n"
    << "start_s = " << c.start_s << "\n"
    << "ftr_t = " << c.ftr_t << "\n"
    << "ftr_modulus = " << c.ftr_modulus << "\n"
    << "oop_t = " << c.oop_t << "\n"
    << "hct_leaves = " << c.hct_leaves << "\n"
    << "n_relays = " << c.n_relays << "\n"
    << "byzantine = " << c.byzantine << "\n"
    << "attacks = " << (c.attacks ? 1 : 0) << "\n"
    << "flood = " << c.flood << "\n"
    << "shared_pol_log = " << (c.shared_pol_log ? 1 : 0) << "\n"
    << "client_distance_m = " << c.client_distance_m << "\n"
    << "signature = " << (c.signature == crypto::SignatureBackend::kMlDsa44 ? "ml-dsa" : "stub") << "\n"
    << "kem = " << (c.kem == crypto::KemBackend::kMlKem768 ? "ml-kem" : "stub") << "\n";
  if (!c.csv_dir.empty()) o << "csv_dir = " << c.csv_dir << "\n";
  return o.str();
}

}  // namespace qpadl::sim
