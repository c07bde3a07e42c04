// Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any FAIL.
#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>
#include <string>

#include "qpadl/kernels/kernels.hpp"
#include "qpadl/onion/onion.hpp"
#include "qpadl/pir/ens.hpp"
#include "qpadl/pir/ftr.hpp"
#include "qpadl/pir/oop.hpp"
#include "qpadl/pir/wire.hpp"
#include "qpadl/pol/pol.hpp"
#include "qpadl/pow/hct.hpp"
#include "qpadl/pow/lattice.hpp"
#include "qpadl/pow/lbp.hpp"
#include "qpadl/psd/psd.hpp"
#include "qpadl/sim/sim.hpp"
#include "support.hpp"
#include "world.hpp"

using namespace qpadl;
using Clock = std::chrono::steady_clock;

namespace {

// Collects violations; keeps the first few messages for the report line.
class Check {
 public:
  void expect(bool ok, const std::string& what) {
    if (ok) return;
    if (++failures_ <= 3) messages_ += (messages_.empty() ? "" : "; ") + what;
  }
  bool ok() const { return failures_ == 0; }
  std::string messages() const { return messages_ + (failures_ > 3 ? " (+" + std::to_string(failures_ - 3) + " more)" : ""); }
  std::string note;

 private:
  std::size_t failures_ = 0;
  std::string messages_;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

template <class F>
double best_seconds(int reps, F&& f) {
  double best = 1e300;
  for (int i = 0; i < reps; ++i) {
    const auto t0 = Clock::now();
    f();
    best = std::min(best, seconds_since(t0));
  }
  return best;
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// ---------------------------------------------------------------- 1
void pir_correctness(Check& c) {
  SeededRng rng(101);
  constexpr std::uint32_t kBlockBits = 3072 * 8;
  constexpr int kInstances = 1000, kPerDb = 25;
  int ens = 0, ftr = 0, oop = 0;
  for (int batch = 0; batch < kInstances / kPerDb; ++batch) {
    const std::uint64_t rows = batch == 0 ? 4096 : 1 + rng.uniform_below(4096);
    const auto db = db::DbMatrix::random(rows, kBlockBits, rng);

    for (int i = 0; i < kPerDb; ++i, ++ens) {
      const auto theta = rng.uniform_below(rows);
      const unsigned l = 2 + static_cast<unsigned>(rng.uniform_below(4));
      const auto q = pir::ens_query_gen(theta, rows, l, rng);
      std::vector<std::optional<Bytes>> rs;
      for (const auto& s : q.shares) rs.emplace_back(pir::ens_respond(s, db));
      c.expect(pir::ens_reconstruct(rs) == test::row_of(db, theta), "ENS rows=" + std::to_string(rows));
    }

    for (int i = 0; i < kPerDb; ++i, ++ftr) {
      const auto theta = rng.uniform_below(rows);
      const unsigned l = 2 + static_cast<unsigned>(rng.uniform_below(4));
      const unsigned t = 1 + static_cast<unsigned>(rng.uniform_below(l - 1));
      const auto q = pir::ftr_query_gen(theta, rows, l, t, pir::kDefaultFtrModulus, rng);
      std::vector<pir::FtrResponse> rs;
      for (unsigned s = 0; s < l; ++s) rs.push_back({s, pir::ftr_respond(q.per_server[s], db, q.modulus)});
      c.expect(pir::ftr_reconstruct(rs, t, q.modulus) == test::row_of(db, theta), "FTR rows=" + std::to_string(rows));
    }

    const unsigned n = 2 + static_cast<unsigned>(rng.uniform_below(3));
    const unsigned t = 1 + static_cast<unsigned>(rng.uniform_below(n));
    auto st = pir::oop_preprocess(db, n, t, kPerDb, rng);
    for (int i = 0; i < kPerDb; ++i, ++oop) {
      const auto theta = rng.uniform_below(rows);
      std::vector<pir::OopHandshake> hs;
      std::vector<pir::OopSeed> seeds;
      for (unsigned s = 0; s < n; ++s) {
        hs.push_back(pir::oop_offline_handshake(st, s));
        seeds.push_back(hs.back().seed);
      }
      const auto qs = pir::oop_query_gen(theta, seeds, st.geometry());
      std::vector<std::optional<Bytes>> rs;
      for (unsigned s = 0; s < n; ++s) rs.emplace_back(pir::oop_respond(st, s, hs[s].session, qs[s]));
      c.expect(pir::oop_reconstruct(rs) == test::row_of(db, theta), "OOP rows=" + std::to_string(rows));
    }
  }
  c.note = std::to_string(ens) + " ENS, " + std::to_string(ftr) + " FTR, " + std::to_string(oop) + " OOP instances";
}

// ---------------------------------------------------------------- 2
void ens_privacy(Check& c) {
  // Every coin sequence for r = 4, l = 2: 4 random bits per query.
  std::map<std::uint64_t, std::map<unsigned, std::map<std::uint64_t, int>>> views;
  for (std::uint64_t theta = 0; theta < 4; ++theta) {
    for (unsigned coins = 0; coins < 16; ++coins) {
      test::ScriptedRng rng(Bytes{static_cast<std::uint8_t>(coins), 0, 0, 0, 0, 0, 0, 0});
      const auto q = pir::ens_query_gen(theta, 4, 2, rng);
      c.expect((q.shares[0] ^ q.shares[1]) == pir::BitVector::unit(4, theta), "shares do not close to e_theta");
      for (unsigned i = 0; i < 2; ++i) ++views[theta][i][q.shares[i].words()[0]];
    }
  }
  for (unsigned i = 0; i < 2; ++i) {
    for (std::uint64_t theta = 0; theta < 4; ++theta) {
      c.expect(views[theta][i] == views[0][i], "server " + std::to_string(i) + " view depends on theta");
      c.expect(views[theta][i].size() == 16, "view support is not all 16 vectors");
      for (const auto& [share, count] : views[theta][i]) c.expect(count == 1, "non-uniform count");
    }
  }
  c.note = "4 targets x 16 coin sequences, per-server counts all equal to 1";
}

// ---------------------------------------------------------------- 3
void ftr_robustness(Check& c) {
  SeededRng rng(103);
  const auto p = pir::kDefaultFtrModulus;
  const auto db = db::DbMatrix::random(6, 128, rng);
  std::size_t cases = 0;
  for (unsigned l = 1; l <= 7; ++l) {
    for (unsigned t = 0; t < l; ++t) {
      const auto q = pir::ftr_query_gen(4, 6, l, t, p, rng);
      std::vector<pir::FtrResponse> honest;
      for (unsigned s = 0; s < l; ++s) honest.push_back({s, pir::ftr_respond(q.per_server[s], db, p)});
      for (unsigned k = t + 1; k <= l; ++k) {
        const unsigned radius = pir::ftr_unique_radius(k, t);
        for (unsigned mask = 0; mask < (1u << k); ++mask) {
          if (static_cast<unsigned>(std::popcount(mask)) > radius) continue;
          std::vector<pir::FtrResponse> answers(honest.begin(), honest.begin() + k);
          for (unsigned i = 0; i < k; ++i) {
            if (!((mask >> i) & 1)) continue;
            for (auto& v : answers[i].values) v = (v + 1 + static_cast<std::uint32_t>(rng.uniform_below(p - 1))) % p;
          }
          ++cases;
          bool same = false;
          try {
            same = pir::ftr_reconstruct(answers, t, p) == test::row_of(db, 4);
          } catch (const Error&) {
          }
          c.expect(same, "l=" + std::to_string(l) + " t=" + std::to_string(t) + " k=" + std::to_string(k) +
                             " mask=" + std::to_string(mask));
        }
      }
    }
  }
  c.note = std::to_string(cases) + " corruption patterns, unique-decoding radius";
}

// ---------------------------------------------------------------- 4
void oop_equivalence(Check& c) {
  SeededRng rng(104);
  int trials = 0;
  for (int group = 0; group < 20; ++group) {
    const std::uint64_t rows = 16 + rng.uniform_below(500);
    const auto db = db::DbMatrix::random(rows, 1024, rng);
    const unsigned n = 2 + static_cast<unsigned>(rng.uniform_below(5));
    const unsigned t = 1 + static_cast<unsigned>(rng.uniform_below(n));
    auto g = pir::OopGeometry::cyclic(rows, n, t);
    for (auto& list : g.mask_chunks) {
      for (std::size_t i = list.size(); i > 1; --i) std::swap(list[i - 1], list[rng.uniform_below(i)]);
    }
    auto st = pir::oop_preprocess(db, g, 10, rng);
    for (int i = 0; i < 10; ++i, ++trials) {
      const auto theta = rng.uniform_below(rows);
      std::vector<pir::OopHandshake> hs;
      std::vector<pir::OopSeed> seeds;
      for (unsigned s = 0; s < n; ++s) {
        hs.push_back(pir::oop_offline_handshake(st, s));
        seeds.push_back(hs.back().seed);
      }
      const auto qs = pir::oop_query_gen(theta, seeds, g);
      std::vector<std::optional<Bytes>> oop_rs;
      for (unsigned s = 0; s < n; ++s) oop_rs.emplace_back(pir::oop_respond(st, s, hs[s].session, qs[s]));
      const auto eq = pir::ens_query_gen(theta, rows, 2 + static_cast<unsigned>(rng.uniform_below(3)), rng);
      std::vector<std::optional<Bytes>> ens_rs;
      for (const auto& s : eq.shares) ens_rs.emplace_back(pir::ens_respond(s, db));
      c.expect(pir::oop_reconstruct(oop_rs) == pir::ens_reconstruct(ens_rs), "block mismatch at trial " + std::to_string(trials));
    }
  }
  c.note = std::to_string(trials) + " trials with shuffled per-server chunk order";
}

// ---------------------------------------------------------------- 5
void kernel_scaling(Check& c) {
  using namespace kernels;
  SeededRng rng(105);
  // Fuzzed exactness.
  for (int trial = 0; trial < 60; ++trial) {
    const std::uint64_t rows = 1 + rng.uniform_below(1500);
    const auto db = db::DbMatrix::random(rows, 64 * static_cast<std::uint32_t>(1 + rng.uniform_below(16)), rng);
    const std::size_t q = 1 + rng.uniform_below(160);
    BitMatrix bits(q, rows);
    for (std::size_t i = 0; i < q; ++i)
      for (std::size_t j = 0; j < rows; ++j) bits.set(i, j, rng.uniform_below(2) == 1);
    Gf2Options opts;
    opts.bitmask = trial % 2 == 1;
    const unsigned workers = 1 + static_cast<unsigned>(rng.uniform_below(8));
    c.expect(batch_matvec_gf2(bits, Gf2DbView::of(db), workers, opts) == scalar_matvec_gf2(bits, Gf2DbView::of(db)),
             "gf2 mismatch at trial " + std::to_string(trial));
    const std::uint32_t primes[] = {2, 3, 257, 65537, 131071};
    const auto p = primes[rng.uniform_below(5)];
    const unsigned w = 1u << rng.uniform_below(4);
    FieldMatrix fq(q, rows);
    for (auto& v : fq.data) v = static_cast<std::uint32_t>(rng.uniform_below(p));
    c.expect(batch_matmul_field(fq, FieldDbView::of(db, w), p, workers) == scalar_matmul_field(fq, FieldDbView::of(db, w), p),
             "field mismatch at trial " + std::to_string(trial));
  }

  // Throughput at q = 128, r = 2^14, b = 3 KB on 4 workers; best of 3.
  constexpr std::size_t kQ = 128, kRows = 1u << 14;
  const auto db = db::DbMatrix::random(kRows, 3072 * 8, rng);
  BitMatrix bits(kQ, kRows);
  for (auto& word : bits.data) word = rng.next_u64();
  const auto gview = Gf2DbView::of(db);
  BitMatrix g_scalar, g_par;
  const double gs = best_seconds(3, [&] { g_scalar = scalar_matvec_gf2(bits, gview); });
  const double gp = best_seconds(3, [&] { g_par = batch_matvec_gf2(bits, gview, 4); });
  c.expect(g_scalar == g_par, "gf2 outputs differ at benchmark shape");

  const std::uint32_t p = pir::kDefaultFtrModulus;
  const auto fview = FieldDbView::of(db, pir::ftr_word_bits(p));
  FieldMatrix fq(kQ, kRows);
  for (auto& v : fq.data) v = static_cast<std::uint32_t>(rng.uniform_below(p));
  FieldMatrix f_scalar, f_par;
  const double fs = best_seconds(3, [&] { f_scalar = scalar_matmul_field(fq, fview, p); });
  const double fp = best_seconds(3, [&] { f_par = batch_matmul_field(fq, fview, p, 4); });
  c.expect(f_scalar == f_par, "field outputs differ at benchmark shape");

  const double gx = gs / gp, fx = fs / fp;
  c.expect(gx >= 2.0, "gf2 speedup " + fmt("%.2f", gx) + " below 2");
  c.expect(fx >= 2.0, "field speedup " + fmt("%.2f", fx) + " below 2");
  c.note = "120 fuzzed shapes exact; speedup gf2 " + fmt("%.2fx", gx) + ", field " + fmt("%.2fx", fx);
}

// ---------------------------------------------------------------- 6
void hct_work(Check& c) {
  SeededRng rng(106);
  double total = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const auto p = pow::hct_gen(256, 16, 2, rng);
    const auto sol = pow::hct_solve(p);
    total += sol.mean_leaf_attempts(2);
    const auto v = pow::hct_verify_path(p, sol.root_nonce(), pow::hct_open(p, sol, trial % 2));
    c.expect(v.accepted, "path rejected");
    c.expect(v.hash_calls == 2, "hash calls " + std::to_string(v.hash_calls) + " for 2 leaves");
  }
  const double mean = total / 50;
  c.expect(mean >= 32768 && mean <= 131072, "mean leaf attempts " + fmt("%.0f", mean));
  for (std::uint32_t leaves = 2; leaves <= 128; leaves *= 2) {
    const auto p = pow::hct_gen(256, 4, leaves, rng);
    const auto sol = pow::hct_solve(p);
    const auto expected = static_cast<std::uint64_t>(std::countr_zero(leaves)) + 1;
    for (std::uint32_t leaf = 0; leaf < leaves; ++leaf) {
      const auto v = pow::hct_verify_path(p, sol.root_nonce(), pow::hct_open(p, sol, leaf));
      c.expect(v.accepted && v.hash_calls == expected, "leaves " + std::to_string(leaves) + " leaf " + std::to_string(leaf));
    }
  }
  c.note = "mean leaf attempts " + fmt("%.0f", mean) + " at kappa 16; hash calls log2(n_l)+1 for n_l 2..128";
}

// ---------------------------------------------------------------- 7
mpz_class centered_mod(const mpz_class& a, const mpz_class& p) {
  mpz_class r = a % p;
  if (r < 0) r += p;
  if (2 * r > p) r -= p;
  return r;
}

void lbp_soundness(Check& c) {
  SeededRng rng(107);
  for (int i = 0; i < 100; ++i) {
    const auto n = 10 + static_cast<std::uint32_t>(rng.uniform_below(31));
    const auto p = pow::lbp_gen(n, rng);
    const auto sol = pow::lbp_solve(p);
    c.expect(pow::lbp_verify(p, sol), "n=" + std::to_string(n) + " rejected");

    // Same coefficients scaled past the bound: still a lattice vector, too long.
    const double bound_sq = std::pow(pow::lbp_alpha(n), 2) * std::pow(p.p.get_d(), 2.0 / n);
    const double norm_sq = pow::lattice::squared_norm(sol.v).get_d();
    const long factor = static_cast<long>(std::ceil(std::sqrt(bound_sq / norm_sq))) + 1;
    auto scaled = sol;
    for (auto& e : scaled.nu) e *= factor;
    for (auto& e : scaled.v) e *= factor;
    c.expect(!pow::lbp_verify(p, scaled), "scaled pair accepted at n=" + std::to_string(n));
    auto nu_only = sol;
    for (auto& e : nu_only.nu) e *= 2;
    c.expect(!pow::lbp_verify(p, nu_only), "scaled nu accepted at n=" + std::to_string(n));
    auto tampered = sol;
    tampered.v[rng.uniform_below(n)] += 1;
    c.expect(!pow::lbp_verify(p, tampered), "tampered v accepted at n=" + std::to_string(n));
  }

  // n = 5: exhaustive search over the box |v_j| <= bound, j >= 2.
  pow::LbpGenOptions opts;
  opts.prime_bits = 20;
  for (int trial = 0; trial < 5; ++trial) {
    const auto p = pow::lbp_gen(5, rng, opts);
    const double bound = pow::lbp_alpha(5) * std::pow(p.p.get_d(), 1.0 / 5);
    const long lim = static_cast<long>(std::floor(bound));
    mpz_class best = p.p * p.p;
    for (long a = -lim; a <= lim; ++a)
      for (long b = -lim; b <= lim; ++b)
        for (long d = -lim; d <= lim; ++d)
          for (long e = -lim; e <= lim; ++e) {
            if (a == 0 && b == 0 && d == 0 && e == 0) continue;
            const mpz_class head = centered_mod(p.x[0] * a + p.x[1] * b + p.x[2] * d + p.x[3] * e, p.p);
            const mpz_class norm = head * head + a * a + b * b + d * d + e * e;
            if (norm < best) best = norm;
          }
    const auto sol = pow::lbp_solve(p);
    const auto norm = pow::lattice::squared_norm(sol.v);
    c.expect(pow::lbp_verify(p, sol), "n=5 rejected");
    c.expect(best.get_d() <= bound * bound, "oracle found no vector within the bound");
    c.expect(norm >= best && norm.get_d() <= bound * bound * (1 + 1e-12), "n=5 norm outside [oracle, bound]");
  }
  c.note = "100 puzzles n in [10,40]; 5 exhaustive n=5 oracles";
}

// ---------------------------------------------------------------- 8
void pol_rate_limit(Check& c) {
  SeededRng rng(108);
  std::vector<pol::LrsKeyPair> keys;
  std::vector<Digest> pks;
  for (int i = 0; i < 8; ++i) {
    keys.push_back(pol::lrs_keygen(rng));
    pks.push_back(keys.back().public_key);
  }
  const pol::RingContext ring(pks);
  const pol::IdealAttestor sok(crypto::make_signature_scheme(crypto::SignatureBackend::kStub), rng);
  struct Sig {
    std::size_t signer;
    std::uint64_t window;
    Digest event;
    pol::LrsSignature sig;
  };
  std::vector<Sig> all;
  for (std::size_t s = 0; s < 8; ++s) {
    for (std::uint64_t w = 0; w < 4; ++w) {
      const auto nonce = rng.array<8>();
      for (std::uint8_t rep = 0; rep < 2; ++rep) {
        const auto e = pol::derive_event_id(keys[s].secret, nonce, w);
        const Bytes msg = {rep};
        all.push_back({s, w, e, pol::lrs_sign(e, keys[s].secret, msg, ring, sok, rng)});
        c.expect(pol::lrs_verify(e, all.back().sig, msg, ring, sok), "signature does not verify");
      }
    }
  }
  std::size_t links = 0;
  for (const auto& a : all) {
    for (const auto& b : all) {
      const bool linked = a.event == b.event && pol::lrs_link(a.event, a.sig, b.sig);
      links += linked;
      c.expect(linked == (a.signer == b.signer && a.window == b.window), "link predicate wrong");
    }
  }

  test::World w(108);
  psd::PsdConfig cfg;
  cfg.index = 0;
  cfg.scheme = PirScheme::kEns;
  psd::PsdNode node(cfg, w.db, w.issuer, w.ring, w.sok, w.kernel, nullptr);
  node.refresh_puzzles(test::World::kStart);
  const auto share = pir::BitVector::unit(w.db.rows(), 0);
  std::size_t accepted = 0, limited = 0;
  for (std::uint64_t i = 0; i < 100; ++i) {
    const psd::SpectrumQuery q{i, {PirScheme::kEns, 0, pir::encode_bits(share)}, w.prove(3)};
    const auto reply = node.handle_spectrum_query(q);
    accepted += reply.accepted();
    limited += reply.rejection == psd::Reject::kRateLimited;
  }
  c.expect(accepted == 1 && limited == 99, "flood accepted " + std::to_string(accepted));
  c.note = std::to_string(all.size() * all.size()) + " signature pairs (" + std::to_string(links) +
           " linked); flood " + std::to_string(accepted) + " accepted, " + std::to_string(limited) + " rate-limited";
}

// ---------------------------------------------------------------- 9
bool contains(const std::vector<Bytes>& frames, ByteSpan needle) {
  return std::any_of(frames.begin(), frames.end(), [&](const Bytes& f) {
    return std::search(f.begin(), f.end(), needle.begin(), needle.end()) != f.end();
  });
}

void onion_layer(Check& c) {
  using namespace onion;
  constexpr NodeId kClient = 100, kEntryId = 1, kMiddleId = 2, kExitId = 3, kServiceId = 50;
  const auto kem = crypto::make_kem(crypto::KemBackend::kMlKem768);
  SeededRng rng(109);
  SimNetwork net(NetworkConfig{});
  Relay entry(kEntryId, kEntry, kem, rng), middle(kMiddleId, kMiddle, kem, rng), exit(kExitId, kExit, kem, rng);
  Service service(kServiceId, [](NodeId, ByteSpan req) { return Bytes(req.begin(), req.end()); });
  OnionClient client(kClient, net, kem);
  net.attach(kEntryId, entry);
  net.attach(kMiddleId, middle);
  net.attach(kExitId, exit);
  net.attach(kServiceId, service);
  const Directory dir = {entry.directory_entry(), middle.directory_entry(), exit.directory_entry()};
  const auto circ = client.build_circuit(dir, rng);

  const std::string s = "SENTINEL-acceptance-9";
  const Bytes sentinel(s.begin(), s.end());
  Bytes msg;
  for (int i = 0; i < 64; ++i) msg.insert(msg.end(), sentinel.begin(), sentinel.end());
  c.expect(client.request(circ, kServiceId, msg) == msg, "sentinel echo differs");
  c.expect(!contains(entry.trace(), sentinel), "sentinel visible at entry");
  c.expect(!contains(middle.trace(), sentinel), "sentinel visible at middle");
  c.expect(contains(exit.trace(), sentinel), "scan cannot see the exit plaintext");

  auto hop = [&](const Relay& r, NodeId prev, NodeId next, const char* name) {
    c.expect(!r.log().empty() && std::all_of(r.log().begin(), r.log().end(),
                                             [&](const RelayLogEntry& e) { return e.prev == prev && e.next == next; }),
             std::string(name) + " knows more than its neighbours");
  };
  hop(entry, kClient, kMiddleId, "entry");
  hop(middle, kEntryId, kExitId, "middle");
  hop(exit, kMiddleId, kServiceId, "exit");

  const auto block = rng.bytes(50 * 1024);
  c.expect(client.request(circ, kServiceId, block) == block, "50 KB block not bit-exact");
  c.note = "ML-KEM circuit; sentinel hidden at entry and middle; 50 KB round trip in " +
           std::to_string((50 * 1024 + kDataPerCell - 1) / kDataPerCell) + " cells";
}

// ---------------------------------------------------------------- 10
void sim_determinism(Check& c) {
  sim::SimConfig cfg;
  cfg.n_users = 64;
  cfg.scheme = PirScheme::kEns;
  cfg.kappa = 8;
  std::vector<Digest> digests;
  double slowest = 0;
  for (int run = 0; run < 3; ++run) {
    const auto t0 = Clock::now();
    const auto r = sim::run_sim(cfg);
    slowest = std::max(slowest, seconds_since(t0));
    digests.push_back(r.transcript_digest);
    c.expect(r.ok(), r.failures.empty() ? "" : r.failures.front());
    c.expect(r.honest_granted == 64, "granted " + std::to_string(r.honest_granted) + " of 64");
    c.expect(r.attacks.size() == 5, "attack count " + std::to_string(r.attacks.size()));
    for (const auto& a : r.attacks) c.expect(a.ok(), a.name + " gave " + a.observed + ", expected " + a.expected);
  }
  c.expect(digests[0] == digests[1] && digests[1] == digests[2], "transcript digests differ");
  c.expect(slowest < 60, "run took " + fmt("%.1f s", slowest));
  c.note = "digest " + to_hex(digests[0]).substr(0, 16) + " x3, slowest run " + fmt("%.1f s", slowest);
}

// ---------------------------------------------------------------- 11
void sizes(Check& c) {
  SeededRng rng(111);
  const auto h = pow::hct_gen(256, 20, 2, rng).serialize().size();
  pow::LbpGenOptions opts;
  opts.ensure_solvable = false;
  const auto l = pow::lbp_gen(150, rng, opts).serialize().size();
  c.expect(h == 37, "HCT " + std::to_string(h) + " bytes");
  c.expect(l == 28133, "LBP " + std::to_string(l) + " bytes");
  c.note = "HCT " + std::to_string(h) + " B, LBP(150) " + std::to_string(l) + " B";
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double limit_s;  // 0: no runtime bound
    std::function<void(Check&)> run;
  };
  const Criterion criteria[] = {
      {1, "pir-correctness", 120, pir_correctness}, {2, "ens-privacy", 1, ens_privacy},
      {3, "ftr-robustness", 0, ftr_robustness},     {4, "oop-ens-equivalence", 0, oop_equivalence},
      {5, "kernel-scaling", 0, kernel_scaling},      {6, "hct-work-factor", 180, hct_work},
      {7, "lbp-soundness", 300, lbp_soundness},      {8, "pol-rate-limit", 0, pol_rate_limit},
      {9, "onion-layer", 0, onion_layer},            {10, "sim-determinism", 0, sim_determinism},
      {11, "size-conformance", 0, sizes},
  };
  int failed = 0;
  for (const auto& cr : criteria) {
    Check c;
    const auto t0 = Clock::now();
    try {
      cr.run(c);
    } catch (const std::exception& e) {
      c.expect(false, std::string("exception: ") + e.what());
    }
    const double secs = seconds_since(t0);
    if (cr.limit_s > 0) c.expect(secs < cr.limit_s, "over " + fmt("%.0f s", cr.limit_s) + " budget");
    failed += !c.ok();
    std::printf("%s %2d %-20s %7.2fs  %s\n", c.ok() ? "PASS" : "FAIL", cr.id, cr.name, secs,
                c.ok() ? c.note.c_str() : c.messages().c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(std::size(criteria)) - failed, std::size(criteria));
  return failed == 0 ? 0 : 1;
}
