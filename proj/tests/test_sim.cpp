#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "qpadl/sim/sim.hpp"
#include "support.hpp"

using namespace qpadl;
using namespace qpadl::sim;
using qpadl::test::error_code;

namespace {

SimConfig small() {
  SimConfig c;
  c.db_rows = 256;
  c.ring_size = 16;
  c.flood = 20;
  return c;
}

std::string joined(const std::vector<std::string>& v) {
  std::string out;
  for (const auto& s : v) out += s + "; ";
  return out;
}

}  // namespace

TEST(SimConfig, ParsesKeysCommentsAndPowers) {
  const auto c = parse_sim_config(
      "# two replicas\n"
      "n_psd = 5\n"
      "scheme = ftr   # robust\n"
      "db_rows = 2^12\n"
      "byzantine = 1\n"
      "signature = stub\n");
  EXPECT_EQ(c.n_psd, 5u);
  EXPECT_EQ(c.scheme, PirScheme::kFtr);
  EXPECT_EQ(c.db_rows, 4096u);
  EXPECT_EQ(c.byzantine, 1u);
  EXPECT_EQ(c.signature, crypto::SignatureBackend::kStub);
  EXPECT_EQ(parse_sim_config(to_text(c)).db_rows, c.db_rows);
}

TEST(SimConfig, UsageErrorsNameTheKey) {
  auto message = [](const std::string& text) {
    try {
      parse_sim_config(text);
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::kUsage);
      return std::string(e.what());
    }
    return std::string("accepted");
  };
  EXPECT_NE(message("bogus = 1").find("bogus"), std::string::npos);
  EXPECT_NE(message("n_psd = two").find("n_psd"), std::string::npos);
  EXPECT_NE(message("n_psd = 1").find("n_psd"), std::string::npos);
  EXPECT_NE(message("ring_size = 12").find("ring_size"), std::string::npos);
  EXPECT_NE(message("byzantine = 1").find("byzantine"), std::string::npos);
  EXPECT_NE(message("db_rows = 4\nn_users = 5").find("n_users"), std::string::npos);
  EXPECT_NE(message("pow = lbp\nkappa = 60").find("kappa"), std::string::npos);
  EXPECT_NE(message("just words").find("line 1"), std::string::npos);
  EXPECT_EQ(error_code([] { load_sim_config("/nonexistent/qpadl.conf"); }), Errc::kUsage);
}

TEST(Sim, SingleUserEnsGrantedInPhaseOrder) {
  auto c = small();
  c.attacks = false;
  c.flood = 0;
  const auto r = run_sim(c);
  ASSERT_TRUE(r.ok()) << joined(r.failures);
  EXPECT_EQ(r.honest_granted, 1u);
  ASSERT_EQ(r.clients.size(), 1u);
  EXPECT_TRUE(r.clients[0].granted);

  std::vector<std::pair<Phase, std::string>> steps;
  for (const auto& e : r.events) {
    if (e.actor == 0) steps.emplace_back(e.phase, e.step);
  }
  const std::vector<std::pair<Phase, std::string>> expected = {
      {Phase::kPol, "pol"},        {Phase::kQuery, "query"}, {Phase::kQuery, "response"},
      {Phase::kQuery, "reconstruct"}, {Phase::kToken, "solve"}, {Phase::kService, "service"},
  };
  EXPECT_EQ(steps, expected);
  EXPECT_EQ(r.events.front().phase, Phase::kSetup);
}

TEST(Sim, FlooderGetsOneAcceptance) {
  auto c = small();
  c.attacks = false;
  c.flood = 100;
  const auto r = run_sim(c);
  EXPECT_TRUE(r.ok()) << joined(r.failures);
  EXPECT_EQ(r.flood_accepted, 1u);
  EXPECT_EQ(r.flood_rate_limited, 99u);
}

TEST(Sim, ByzantineFtrReplicaTolerated) {
  auto c = small();
  c.scheme = PirScheme::kFtr;
  c.n_psd = 5;
  c.ftr_t = 1;
  c.byzantine = 1;
  c.attacks = false;
  c.flood = 0;
  const auto r = run_sim(c);
  ASSERT_TRUE(r.ok()) << joined(r.failures);
  EXPECT_EQ(r.honest_granted, 1u);
  EXPECT_EQ(std::set<unsigned>(r.byzantine_suspected.begin(), r.byzantine_suspected.end()),
            std::set<unsigned>{4});
}

TEST(Sim, OopSchemeEndToEnd) {
  auto c = small();
  c.scheme = PirScheme::kOop;
  c.n_psd = 3;
  c.n_users = 4;
  c.flood = 0;
  const auto r = run_sim(c);
  EXPECT_TRUE(r.ok()) << joined(r.failures);
  EXPECT_EQ(r.honest_granted, 4u);
}

TEST(Sim, AttackMatrix) {
  auto c = small();
  c.n_users = 2;
  const auto r = run_sim(c);
  EXPECT_TRUE(r.ok()) << joined(r.failures);
  std::map<std::string, std::string> observed;
  for (const auto& a : r.attacks) observed[a.name] = a.observed;
  const std::map<std::string, std::string> expected = {
      {"replayed-pol", "psd:rate-limited"},  {"wrong-ring", "psd:bad-proof"},
      {"foreign-window-pol", "sas:pol"},      {"unsigned-puzzle", "sas:signature"},
      {"reused-token", "sas:replay"},
  };
  EXPECT_EQ(observed, expected);
}

TEST(Sim, UsersSpreadOverApsAndRounds) {
  auto c = small();
  c.ring_size = 4;
  c.n_users = 7;  // three honest APs, so three rounds
  c.attacks = false;
  c.flood = 0;
  c.kappa = 4;
  const auto r = run_sim(c);
  ASSERT_TRUE(r.ok()) << joined(r.failures);
  EXPECT_EQ(r.honest_granted, 7u);
  std::set<std::uint64_t> thetas;
  for (const auto& t : r.clients) {
    EXPECT_EQ(t.ap, t.user % 3);
    EXPECT_EQ(t.round, t.user / 3);
    thetas.insert(t.theta);
  }
  EXPECT_EQ(thetas.size(), 7u);
}

TEST(Sim, DeterministicTranscript) {
  auto c = small();
  c.n_users = 3;
  const auto a = run_sim(c);
  const auto b = run_sim(c);
  const auto d = run_sim(c);
  EXPECT_EQ(a.transcript_digest, b.transcript_digest);
  EXPECT_EQ(a.transcript_digest, d.transcript_digest);
  c.seed = 2;
  EXPECT_NE(run_sim(c).transcript_digest, a.transcript_digest);
}

TEST(Sim, TranscriptAttributesEveryFrame) {
  auto c = small();
  c.flood = 3;
  const auto r = run_sim(c);
  ASSERT_TRUE(r.ok()) << joined(r.failures);
  ASSERT_FALSE(r.frames.empty());
  EXPECT_EQ(r.frames.size(), r.metrics.frames);
  std::uint64_t bytes = 0;
  for (std::size_t i = 0; i < r.frames.size(); ++i) {
    const auto& f = r.frames[i];
    EXPECT_TRUE(r.roles.contains(f.from));
    EXPECT_TRUE(r.roles.contains(f.to));
    EXPECT_LE(f.sent + c.link_delay_us, f.delivered);
    if (i > 0) {
      EXPECT_LE(r.frames[i - 1].delivered, f.delivered);
    }
    bytes += f.bytes;
  }
  EXPECT_EQ(bytes, r.metrics.bytes_on_wire);
  // Clients only ever talk to relays or access points.
  for (const auto& f : r.frames) {
    const auto& from = r.roles.at(f.from);
    const auto& to = r.roles.at(f.to);
    if (from.rfind("client", 0) == 0 && from.find("radio") == std::string::npos) {
      EXPECT_EQ(to.rfind("relay", 0), 0u) << from << " -> " << to;
    }
  }
}

TEST(Sim, CsvOutput) {
  auto c = small();
  c.flood = 2;
  const auto dir = std::filesystem::temp_directory_path() / "qpadl_sim_csv";
  std::filesystem::remove_all(dir);
  c.csv_dir = dir.string();
  const auto r = run_sim(c);
  for (const char* name : {"phase_pol.csv", "phase_query.csv", "phase_response.csv", "phase_reconstruct.csv",
                           "phase_solve.csv", "phase_service.csv", "summary.csv", "attacks.csv", "frames.csv"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / name)) << name;
  }
  std::ifstream frames(dir / "frames.csv");
  std::size_t lines = 0;
  for (std::string line; std::getline(frames, line);) ++lines;
  EXPECT_EQ(lines, r.frames.size() + 1);
  std::filesystem::remove_all(dir);
}
