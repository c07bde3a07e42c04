#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "qpadl/common/error.hpp"
#include "qpadl/common/rng.hpp"
#include "qpadl/db/block.hpp"
#include "qpadl/db/file.hpp"
#include "qpadl/kernels/kernels.hpp"
#include "qpadl/pir/ftr.hpp"
#include "qpadl/pow/hct.hpp"
#include "qpadl/pow/lbp.hpp"
#include "qpadl/sim/sim.hpp"

namespace {

using namespace qpadl;
using Clock = std::chrono::steady_clock;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitAssertion = 3;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, sep);) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// "2^12..2^18" walks powers of two; otherwise a comma list of counts.
std::vector<std::uint64_t> parse_sweep(const std::string& text) {
  std::vector<std::uint64_t> out;
  if (const auto dots = text.find(".."); dots != std::string::npos) {
    const auto lo = sim::parse_count(text.substr(0, dots));
    const auto hi = sim::parse_count(text.substr(dots + 2));
    if (lo == 0 || lo > hi) fail(Errc::kUsage, "empty range '" + text + "'");
    for (auto v = lo; v <= hi; v *= 2) out.push_back(v);
    return out;
  }
  for (const auto& item : split(text, ',')) out.push_back(sim::parse_count(item));
  if (out.empty()) fail(Errc::kUsage, "empty list '" + text + "'");
  return out;
}

std::ostream& open_out(const std::string& path, std::ofstream& file) {
  if (path.empty() || path == "-") return std::cout;
  file.open(path);
  if (!file) fail(Errc::kUsage, "cannot write " + path);
  return file;
}

// ---- sim run ----

struct SimArgs {
  std::string config;
  std::string csv_dir;
  unsigned runs = 1;
};

int sim_run(const SimArgs& args) {
  auto config = sim::load_sim_config(args.config);
  if (!args.csv_dir.empty()) config.csv_dir = args.csv_dir;
  std::optional<Digest> first;
  bool ok = true;
  for (unsigned run = 0; run < args.runs; ++run) {
    const auto t0 = Clock::now();
    const auto report = sim::run_sim(config);
    const auto& m = report.metrics;
    std::cout << "run " << run + 1 << ": " << report.honest_granted << "/" << config.n_users << " granted, "
              << m.frames << " frames, " << m.bytes_on_wire << " bytes, " << std::fixed << std::setprecision(1)
              << ms_since(t0) << " ms\n";
    std::cout << "  phase ms: pol " << m.pol_us / 1e3 << ", query " << m.query_us / 1e3 << ", response "
              << m.response_us / 1e3 << ", reconstruct " << m.reconstruct_us / 1e3 << ", solve " << m.solve_us / 1e3
              << ", service " << m.service_us / 1e3 << "\n";
    for (const auto& a : report.attacks) {
      std::cout << "  attack " << a.name << ": " << a.observed << (a.ok() ? "" : " (expected " + a.expected + ")")
                << "\n";
    }
    if (config.flood > 0) {
      std::cout << "  flood: " << report.flood_accepted << " accepted, " << report.flood_rate_limited
                << " rate-limited\n";
    }
    std::cout << "  transcript " << to_hex(report.transcript_digest) << "\n";
    for (const auto& f : report.failures) std::cout << "  FAIL " << f << "\n";
    ok = ok && report.ok();
    if (first && *first != report.transcript_digest) {
      std::cout << "  FAIL transcript differs from run 1\n";
      ok = false;
    }
    if (!first) first = report.transcript_digest;
  }
  return ok ? kExitOk : kExitAssertion;
}

// ---- bench pir ----

struct PirBenchArgs {
  std::string schemes = "ens";
  std::string rows = "2^12..2^14";
  std::string batch = "1,128";
  unsigned workers = 4;
  std::uint32_t block_bytes = 3072;
  std::uint32_t modulus = 65537;
  unsigned servers = 2;  // OOP chunk count
  unsigned reps = 1;
  std::uint64_t seed = 1;
  std::string out;
};

// Best of `reps` runs of the server-side batch.
template <class F>
double time_best(unsigned reps, F&& f) {
  double best = 0;
  for (unsigned i = 0; i < reps; ++i) {
    const auto t0 = Clock::now();
    f();
    const double ms = ms_since(t0);
    if (i == 0 || ms < best) best = ms;
  }
  return best;
}

int bench_pir(const PirBenchArgs& args) {
  std::vector<PirScheme> schemes;
  for (const auto& s : split(args.schemes, ',')) {
    const auto scheme = parse_scheme(s);
    if (scheme == PirScheme::kNone) fail(Errc::kUsage, "--scheme: ens, ftr or oop");
    schemes.push_back(scheme);
  }
  const auto rows = parse_sweep(args.rows);
  const auto batches = parse_sweep(args.batch);
  if (args.block_bytes == 0 || args.block_bytes % 8 != 0) fail(Errc::kUsage, "--block-bytes: positive multiple of 8");
  if (args.servers < 2) fail(Errc::kUsage, "--servers: at least 2");
  const auto scalar = kernels::backend_select(kernels::Backend::kScalar, 1);
  const auto parallel = kernels::backend_select(kernels::Backend::kDataParallel, args.workers);

  std::ofstream file;
  auto& out = open_out(args.out, file);
  out << "scheme,q,rows,db_bytes,workers,backend,ms_total,ms_per_query,speedup\n";
  SeededRng rng(args.seed, "bench-pir");
  for (const auto r : rows) {
    const auto db = db::DbMatrix::random(r, args.block_bytes * 8, rng);
    for (const auto scheme : schemes) {
      for (const auto q : batches) {
        std::function<void(const kernels::Kernel&)> job;
        kernels::BitMatrix bits;
        kernels::FieldMatrix field;
        auto gf2_view = kernels::Gf2DbView::of(db);
        if (scheme == PirScheme::kOop) {
          // Online work of one server: its own chunk of about r/n rows.
          gf2_view = gf2_view.slice(0, (r + args.servers - 1) / args.servers);
        }
        kernels::FieldDbView field_view;
        if (scheme == PirScheme::kFtr) {
          field_view = kernels::FieldDbView::of(db, pir::ftr_word_bits(args.modulus));
          field = kernels::FieldMatrix(q, r);
          for (auto& v : field.data) v = static_cast<std::uint32_t>(rng.uniform_below(args.modulus));
          job = [&](const kernels::Kernel& k) { (void)k.field(field, field_view, args.modulus); };
        } else {
          bits = kernels::BitMatrix(q, gf2_view.rows);
          for (auto& w : bits.data) w = rng.next_u64();
          for (std::size_t i = 0; i < q; ++i) {
            // Clear padding bits past the last row.
            if (const auto tail = gf2_view.rows % 64; tail != 0) bits.row(i)[bits.words - 1] &= (1ull << tail) - 1;
          }
          job = [&](const kernels::Kernel& k) { (void)k.gf2(bits, gf2_view); };
        }
        const double ms_scalar = time_best(args.reps, [&] { job(*scalar); });
        const double ms_parallel = time_best(args.reps, [&] { job(*parallel); });
        const auto db_bytes = r * std::uint64_t{args.block_bytes};
        auto row = [&](const char* backend, unsigned workers, double ms, double speedup) {
          out << scheme_name(scheme) << "," << q << "," << r << "," << db_bytes << "," << workers << "," << backend
              << "," << std::fixed << std::setprecision(3) << ms << "," << ms / static_cast<double>(q) << ","
              << std::setprecision(2) << speedup << "\n";
        };
        row("scalar", 1, ms_scalar, 1.0);
        row("parallel", args.workers, ms_parallel, ms_scalar / ms_parallel);
      }
    }
  }
  return kExitOk;
}

// ---- bench pow ----

struct PowBenchArgs {
  std::string kind = "hct";
  std::string kappa;
  unsigned trials = 5;
  std::uint32_t leaves = 2;
  std::uint64_t seed = 1;
  std::string out;
};

int bench_pow(const PowBenchArgs& args) {
  const auto kind = parse_pow(args.kind);
  if (kind == PowKind::kNone) fail(Errc::kUsage, "--kind: hct or lbp");
  const auto kappas = parse_sweep(args.kappa.empty() ? (kind == PowKind::kHct ? "14,18" : "10,20,30") : args.kappa);
  if (args.trials == 0) fail(Errc::kUsage, "--trials: must be positive");
  std::ofstream file;
  auto& out = open_out(args.out, file);
  out << "pow,kappa,trials,puzzle_bytes,solution_bytes,ms_gen,ms_solve,ms_verify,mean_leaf_attempts\n";
  SeededRng rng(args.seed, "bench-pow");
  db::BindOptions bind;
  bind.hct_leaves = args.leaves;
  for (const auto kappa : kappas) {
    double gen = 0, solve = 0, verify = 0, attempts = 0;
    std::size_t puzzle_bytes = 0, solution_bytes = 0;
    for (unsigned i = 0; i < args.trials; ++i) {
      auto t0 = Clock::now();
      const auto bytes = db::generate_puzzle(kind, static_cast<std::uint32_t>(kappa), bind, rng);
      gen += ms_since(t0);
      puzzle_bytes = bytes.size();
      bool ok = false;
      if (kind == PowKind::kHct) {
        const auto puzzle = pow::HctPuzzle::deserialize(bytes);
        t0 = Clock::now();
        const auto sol = pow::hct_solve(puzzle);
        const auto proof = pow::hct_prove(puzzle, sol, {});
        solve += ms_since(t0);
        attempts += sol.mean_leaf_attempts(puzzle.leaves);
        solution_bytes = proof.serialize().size();
        t0 = Clock::now();
        ok = pow::hct_verify_noninteractive(puzzle, proof, {}).accepted;
        verify += ms_since(t0);
      } else {
        const auto puzzle = pow::LbpPuzzle::deserialize(bytes);
        t0 = Clock::now();
        const auto sol = pow::lbp_solve(puzzle);
        solve += ms_since(t0);
        solution_bytes = sol.serialize(puzzle).size();
        t0 = Clock::now();
        ok = pow::lbp_verify(puzzle, sol);
        verify += ms_since(t0);
      }
      if (!ok) {
        std::cerr << "solution for kappa " << kappa << " failed verification\n";
        return kExitAssertion;
      }
    }
    const double n = args.trials;
    out << pow_name(kind) << "," << kappa << "," << args.trials << "," << puzzle_bytes << "," << solution_bytes << ","
        << std::fixed << std::setprecision(3) << gen / n << "," << solve / n << "," << verify / n << ","
        << std::setprecision(1) << (kind == PowKind::kHct ? attempts / n : 0.0) << "\n";
  }
  return kExitOk;
}

// ---- db build ----

struct DbBuildArgs {
  std::string records;
  std::string out;
  std::string pow = "hct";
  std::string kappa = "20";
  std::string dims = "16x16x2x2";
  std::uint32_t block_bytes = 3072;
  std::uint32_t leaves = 2;
  std::uint64_t now = 0;
  std::uint64_t puzzle_window_s = 3600;
  std::string signature = "ml-dsa";
  std::uint64_t seed = 0;  // 0 draws issuer keys and puzzles from the OS
};

db::IndexParams parse_dims(const std::string& text) {
  const auto parts = split(text, 'x');
  if (parts.size() != 4) fail(Errc::kUsage, "--dims: expected COLSxROWSxCHANNELSxWINDOWS");
  db::IndexParams p;
  p.n_cols = static_cast<std::uint32_t>(sim::parse_count(parts[0]));
  p.n_rows = static_cast<std::uint32_t>(sim::parse_count(parts[1]));
  p.n_ch = static_cast<std::uint32_t>(sim::parse_count(parts[2]));
  p.n_tv = static_cast<std::uint32_t>(sim::parse_count(parts[3]));
  return p;
}

// CSV: cell_x,cell_y,channel,time_window,eirp_dbm,available with a header.
std::vector<db::SpectrumRecord> read_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::kUsage, "cannot read records file " + path);
  std::vector<db::SpectrumRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#' || (line_no == 1 && line.rfind("cell_x", 0) == 0)) continue;
    const auto f = split(line, ',');
    if (f.size() != 6) fail(Errc::kInput, path + ":" + std::to_string(line_no) + ": expected 6 fields");
    try {
      db::SpectrumRecord r;
      r.coord.cell_x = static_cast<std::uint32_t>(std::stoul(f[0]));
      r.coord.cell_y = static_cast<std::uint32_t>(std::stoul(f[1]));
      r.channel = static_cast<std::uint32_t>(std::stoul(f[2]));
      r.time_window = static_cast<std::uint32_t>(std::stoul(f[3]));
      r.eirp_centi_dbm = static_cast<std::int32_t>(std::lround(std::stod(f[4]) * 100));
      r.available = f[5] == "1" || f[5] == "true";
      out.push_back(r);
    } catch (const std::logic_error&) {
      fail(Errc::kInput, path + ":" + std::to_string(line_no) + ": malformed number");
    }
  }
  return out;
}

int db_build(const DbBuildArgs& args) {
  const auto kind = parse_pow(args.pow);
  db::RecordLimits limits;
  limits.dims = parse_dims(args.dims);
  if (args.block_bytes == 0 || args.block_bytes % 8 != 0) fail(Errc::kUsage, "--block-bytes: positive multiple of 8");
  std::vector<std::uint32_t> difficulties;
  if (kind != PowKind::kNone) {
    for (const auto k : parse_sweep(args.kappa)) difficulties.push_back(static_cast<std::uint32_t>(k));
  }
  crypto::SignatureBackend backend;
  if (args.signature == "ml-dsa") {
    backend = crypto::SignatureBackend::kMlDsa44;
  } else if (args.signature == "stub") {
    backend = crypto::SignatureBackend::kStub;
  } else {
    fail(Errc::kUsage, "--signature: ml-dsa or stub");
  }

  const auto records = read_records(args.records);
  auto db = db::db_build(records, limits, args.block_bytes * 8);
  SystemRng system;
  std::optional<SeededRng> seeded;
  if (args.seed != 0) seeded.emplace(args.seed, "db-build");
  Rng& rng = seeded ? static_cast<Rng&>(*seeded) : system;
  const auto now = args.now != 0 ? args.now
                                  : static_cast<std::uint64_t>(std::chrono::duration_cast<std::chrono::seconds>(
                                                                   std::chrono::system_clock::now().time_since_epoch())
                                                                   .count());
  if (kind != PowKind::kNone) {
    const auto issuer = db::PuzzleIssuer::generate(backend, rng);
    db::BindOptions bind;
    bind.validity_window = db::validity_window_at(now, args.puzzle_window_s);
    bind.hct_leaves = args.leaves;
    db = db::puzzle_bind(db, issuer, kind, difficulties, bind, rng);
    std::ofstream pub(args.out + ".pub", std::ios::binary);
    if (!pub) fail(Errc::kUsage, "cannot write " + args.out + ".pub");
    pub.write(reinterpret_cast<const char*>(issuer.keys.public_key.data()),
              static_cast<std::streamsize>(issuer.keys.public_key.size()));
  }
  db::db_save(db, args.out);
  std::cout << "wrote " << args.out << ": " << db.rows() << " rows of " << db.block_bytes() << " bytes, "
            << records.size() << " records, pow " << pow_name(kind) << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"QPADL private spectrum access: simulation, benchmarks and database tools"};
  app.require_subcommand(1);

  SimArgs sim_args;
  auto* sim_cmd = app.add_subcommand("sim", "End-to-end simulation");
  sim_cmd->require_subcommand(1);
  auto* sim_run_cmd = sim_cmd->add_subcommand("run", "Run the simulation described by a config file");
  sim_run_cmd->add_option("--config", sim_args.config, "key = value config file")->required();
  sim_run_cmd->add_option("--csv", sim_args.csv_dir, "Directory for CSV output (overrides csv_dir)");
  sim_run_cmd->add_option("--runs", sim_args.runs, "Repeat and compare transcript digests")->check(CLI::PositiveNumber);

  auto* bench_cmd = app.add_subcommand("bench", "Benchmarks");
  bench_cmd->require_subcommand(1);
  PirBenchArgs pir_args;
  auto* pir_cmd = bench_cmd->add_subcommand("pir", "Server-side PIR kernels, scalar against data-parallel");
  pir_cmd->add_option("--scheme", pir_args.schemes, "ens, ftr, oop or a comma list");
  pir_cmd->add_option("--rows", pir_args.rows, "Row counts: 2^a..2^b or a comma list");
  pir_cmd->add_option("--batch", pir_args.batch, "Queries per batch, comma list");
  pir_cmd->add_option("--workers", pir_args.workers)->check(CLI::PositiveNumber);
  pir_cmd->add_option("--block-bytes", pir_args.block_bytes);
  pir_cmd->add_option("--modulus", pir_args.modulus, "FTR field prime");
  pir_cmd->add_option("--servers", pir_args.servers, "OOP chunk count");
  pir_cmd->add_option("--reps", pir_args.reps, "Best of this many runs")->check(CLI::PositiveNumber);
  pir_cmd->add_option("--seed", pir_args.seed);
  pir_cmd->add_option("--out", pir_args.out, "CSV path (default stdout)");

  PowBenchArgs pow_args;
  auto* pow_cmd = bench_cmd->add_subcommand("pow", "Puzzle generation, solving and verification");
  pow_cmd->add_option("--kind", pow_args.kind, "hct or lbp");
  pow_cmd->add_option("--kappa", pow_args.kappa, "Difficulties (HCT) or dimensions (LBP), comma list");
  pow_cmd->add_option("--trials", pow_args.trials);
  pow_cmd->add_option("--leaves", pow_args.leaves, "HCT leaf count");
  pow_cmd->add_option("--seed", pow_args.seed);
  pow_cmd->add_option("--out", pow_args.out, "CSV path (default stdout)");

  auto* db_cmd = app.add_subcommand("db", "Database tools");
  db_cmd->require_subcommand(1);
  DbBuildArgs db_args;
  auto* build_cmd = db_cmd->add_subcommand("build", "Build a bound database file from a records CSV");
  build_cmd->add_option("--records", db_args.records, "cell_x,cell_y,channel,time_window,eirp_dbm,available")
      ->required();
  build_cmd->add_option("--out", db_args.out, "Database file; the issuer key goes to <out>.pub")->required();
  build_cmd->add_option("--pow", db_args.pow, "hct, lbp or none");
  build_cmd->add_option("--kappa", db_args.kappa, "Difficulties, comma list");
  build_cmd->add_option("--dims", db_args.dims, "COLSxROWSxCHANNELSxWINDOWS");
  build_cmd->add_option("--block-bytes", db_args.block_bytes);
  build_cmd->add_option("--leaves", db_args.leaves, "HCT leaf count");
  build_cmd->add_option("--now", db_args.now, "Unix time for the validity window (default: clock)");
  build_cmd->add_option("--puzzle-window", db_args.puzzle_window_s, "Seconds per validity window");
  build_cmd->add_option("--signature", db_args.signature, "ml-dsa or stub");
  build_cmd->add_option("--seed", db_args.seed, "Deterministic keys and puzzles (0: system entropy)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (sim_run_cmd->parsed()) return sim_run(sim_args);
    if (pir_cmd->parsed()) return bench_pir(pir_args);
    if (pow_cmd->parsed()) return bench_pow(pow_args);
    if (build_cmd->parsed()) return db_build(db_args);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == Errc::kUsage ? kExitConfig : kExitFailure;
  }
  return kExitConfig;
}
