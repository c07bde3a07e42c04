#include "qpadl/sim/sim.hpp"

#include <algorithm>
#include <chrono>
#include <deque>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <numeric>

#include "qpadl/common/error.hpp"
#include "qpadl/crypto/hash.hpp"
#include "qpadl/db/block.hpp"
#include "qpadl/onion/onion.hpp"
#include "qpadl/pir/ens.hpp"
#include "qpadl/pir/ftr.hpp"
#include "qpadl/pir/oop.hpp"
#include "qpadl/pir/wire.hpp"
#include "qpadl/pol/pol.hpp"
#include "qpadl/psd/psd.hpp"
#include "qpadl/sas/sas.hpp"

namespace qpadl::sim {

std::string phase_name(Phase p) {
  switch (p) {
    case Phase::kSetup:
      return "setup";
    case Phase::kPol:
      return "pol";
    case Phase::kQuery:
      return "query";
    case Phase::kToken:
      return "token";
    case Phase::kService:
      return "service";
  }
  return "unknown";
}

namespace {

using Clock = std::chrono::steady_clock;
using onion::NodeId;

double elapsed_us(Clock::time_point t0) {
  return std::chrono::duration<double, std::micro>(Clock::now() - t0).count();
}

constexpr NodeId kRelayBase = 100;
constexpr NodeId kPsdBase = 400;
constexpr NodeId kSasId = 900;
constexpr NodeId kApBase = 1000;
constexpr NodeId kClientBase = 200000;
constexpr NodeId kAttackerBase = 300000;
constexpr NodeId kRadioOffset = 500000;  // radio port of an onion endpoint

// Radio frames between a client and an access point.
enum RadioType : std::uint8_t { kBeaconFrame = 1, kPolRequestFrame = 2, kPolReplyFrame = 3 };
// Frames addressed to a PSD service.
enum PsdType : std::uint8_t { kSpectrumQuery = 1, kOopHandshake = 2 };

Bytes encode_beacon(const pol::Beacon& b) {
  ByteWriter w;
  w.u8(kBeaconFrame);
  w.u32(b.ap);
  w.u64(b.window);
  w.raw(b.nonce);
  return std::move(w).take();
}

pol::Beacon read_beacon(ByteReader& r) {
  pol::Beacon b;
  b.ap = r.u32();
  b.window = r.u64();
  b.nonce = r.array<8>();
  return b;
}

Bytes tagged(std::uint8_t type, ByteSpan body) {
  Bytes out;
  out.reserve(body.size() + 1);
  out.push_back(type);
  out.insert(out.end(), body.begin(), body.end());
  return out;
}

// Receiving end of a client's radio.
class RadioPort final : public onion::Node {
 public:
  void on_frame(onion::SimNetwork&, NodeId from, ByteSpan frame) override {
    inbox.emplace_back(from, Bytes(frame.begin(), frame.end()));
  }
  std::optional<Bytes> take() {
    if (inbox.empty()) return std::nullopt;
    auto f = std::move(inbox.front().second);
    inbox.pop_front();
    return f;
  }
  std::deque<std::pair<NodeId, Bytes>> inbox;
};

// Access point on the radio side. It measures the sender at the distance the
// harness assigns to that radio.
class ApNode final : public onion::Node {
 public:
  ApNode(pol::AccessPoint& ap, std::function<double(NodeId)> distance, Rng& rng)
      : ap_(ap), distance_(std::move(distance)), rng_(rng) {}

  void on_frame(onion::SimNetwork& net, NodeId from, ByteSpan frame) override {
    ByteWriter reply;
    reply.u8(kPolReplyFrame);
    try {
      ByteReader r(frame);
      if (r.u8() != kPolRequestFrame) fail(Errc::kProtocol, "AP expects PoL requests");
      pol::PolRequest req;
      req.beacon = read_beacon(r);
      req.commitment = r.array<32>();
      r.expect_end();
      const double d = distance_(from);
      req.rss_dbm = pol::expected_rss(d);
      req.rtt_s = pol::expected_rtt(d);
      const auto outcome = ap_.respond(req, rng_);
      reply.u8(static_cast<std::uint8_t>(outcome.status));
      if (outcome.proof) reply.raw(outcome.proof->encode());
    } catch (const Error&) {
      reply.u8(0xff);
    }
    net.send(ap_node_id(), from, std::move(reply).take());
  }

  NodeId ap_node_id() const { return kApBase + ap_.id(); }
  pol::AccessPoint& ap() { return ap_; }

 private:
  pol::AccessPoint& ap_;
  std::function<double(NodeId)> distance_;
  Rng& rng_;
};

// One client: onion endpoint plus radio.
struct Endpoint {
  std::unique_ptr<onion::OnionClient> onion;
  RadioPort radio;
  NodeId radio_id = 0;
  std::map<NodeId, std::uint32_t> circuits;  // exits pin a circuit to one destination
  SeededRng rng;

  Endpoint(NodeId onion_id, NodeId radio, onion::SimNetwork& net, std::shared_ptr<const crypto::Kem> kem,
           std::uint64_t seed, const std::string& label)
      : onion(std::make_unique<onion::OnionClient>(onion_id, net, std::move(kem))), radio_id(radio), rng(seed, label) {
    net.attach(radio_id, this->radio);
  }
};

struct PirRetrieval {
  std::vector<psd::SpectrumReply> replies;
  std::optional<Bytes> block;
  std::vector<unsigned> suspected;
};

class Simulation {
 public:
  explicit Simulation(const SimConfig& config)
      : c_(config),
        rng_(config.seed, "sim"),
        net_(onion::NetworkConfig{config.link_delay_us, config.jitter_us, config.seed, true}) {}

  SimReport run() {
    setup();
    const std::uint32_t honest_aps = c_.ring_size - 1;
    const std::uint32_t rounds = (c_.n_users + honest_aps - 1) / honest_aps;
    pick_rows();
    for (std::uint32_t round = 0; round < rounds; ++round) {
      if (round > 0) advance_clock(c_.start_s + std::uint64_t{round} * c_.window_s);
      for (std::uint32_t u = round * honest_aps; u < std::min(c_.n_users, (round + 1) * honest_aps); ++u) {
        honest_client(u, u % honest_aps, round);
      }
      if (round == 0) {
        if (c_.attacks) attacks();
        if (c_.flood > 0) flood();
      }
    }
    finish();
    return std::move(report_);
  }

 private:
  void event(Phase phase, std::string step, std::int64_t actor, std::string detail = {}) {
    report_.events.push_back({phase, std::move(step), actor, std::move(detail)});
  }
  void check(bool ok, const std::string& what) {
    if (!ok) report_.failures.push_back(what);
  }

  void setup() {
    const auto t0 = Clock::now();
    sig_ = crypto::make_signature_scheme(c_.signature);
    kem_ = crypto::make_kem(c_.kem);

    // Access points and their ring.
    std::vector<Digest> pks;
    for (std::uint32_t i = 0; i < c_.ring_size; ++i) {
      ap_keys_.push_back(pol::lrs_keygen(rng_));
      pks.push_back(ap_keys_.back().public_key);
    }
    ring_ = std::make_shared<pol::RingContext>(pks);
    sok_ = std::make_shared<pol::IdealAttestor>(sig_, rng_);
    for (std::uint32_t i = 0; i < c_.ring_size; ++i) {
      pol::AccessPointConfig ac;
      ac.id = i;
      aps_.push_back(std::make_unique<pol::AccessPoint>(ac, ap_keys_[i], ring_, sok_));
      ap_nodes_.push_back(std::make_unique<ApNode>(
          *aps_.back(), [this](NodeId from) { return distance_of(from); }, rng_));
      net_.attach(kApBase + i, *ap_nodes_.back());
      report_.roles[kApBase + i] = "ap" + std::to_string(i);
    }
    window_ = c_.start_s / c_.window_s;

    // Database shared by the replicas.
    db::RecordLimits limits;
    limits.dims = {static_cast<std::uint32_t>(c_.db_rows), 1, 1, 1};
    std::vector<db::SpectrumRecord> records;
    SeededRng rec_rng = rng_.fork("records");
    for (std::uint64_t theta = 0; theta < c_.db_rows; ++theta) {
      db::SpectrumRecord r;
      r.coord = {static_cast<std::uint32_t>(theta), 0};
      r.eirp_centi_dbm = static_cast<std::int32_t>(rec_rng.uniform_below(6601)) - 3000;
      r.available = rec_rng.uniform_below(2) == 1;
      records.push_back(r);
    }
    auto db = db::db_build(records, limits, c_.block_bytes * 8);
    issuer_ = db::PuzzleIssuer::generate(c_.signature, rng_);
    db::BindOptions bind;
    bind.validity_window = db::validity_window_at(c_.start_s, c_.puzzle_window_s);
    bind.hct_leaves = c_.hct_leaves;
    const std::uint32_t difficulties[] = {c_.kappa};
    SeededRng bind_rng(c_.seed, "bind/" + std::to_string(bind.validity_window));
    db = db::puzzle_bind(db, issuer_, c_.pow, difficulties, bind, bind_rng);
    db.scheme = c_.scheme;
    oracle_db_ = db;
    event(Phase::kSetup, "bind", -1, std::to_string(db.rows()) + " rows");

    // Replicas.
    kernel_ = kernels::backend_select(kernels::Backend::kDataParallel, c_.workers);
    if (c_.shared_pol_log) shared_log_ = std::make_shared<psd::PolLog>();
    if (c_.scheme == PirScheme::kOop) geometry_ = pir::OopGeometry::cyclic(c_.db_rows, c_.n_psd, c_.oop_t);
    for (unsigned i = 0; i < c_.n_psd; ++i) {
      psd::PsdConfig pc;
      pc.index = i;
      pc.scheme = c_.scheme;
      pc.ftr_modulus = c_.ftr_modulus;
      pc.beacon_seconds = c_.window_s;
      pc.pow = c_.pow;
      pc.difficulties = {c_.kappa};
      pc.puzzle_window_seconds = c_.puzzle_window_s;
      pc.bind_seed = c_.seed;
      pc.bind = bind;
      pc.oop_geometry = geometry_;
      pc.oop_queue_depth = c_.n_users + 2;
      psds_.push_back(std::make_unique<psd::PsdNode>(pc, db, issuer_, ring_, sok_, kernel_, shared_log_));
      psds_.back()->refresh_puzzles(c_.start_s);
      const bool byzantine = i >= c_.n_psd - c_.byzantine;
      services_.push_back(std::make_unique<onion::Service>(
          kPsdBase + i, [this, i, byzantine](NodeId, ByteSpan request) { return psd_handler(i, byzantine, request); }));
      net_.attach(kPsdBase + i, *services_.back());
      report_.roles[kPsdBase + i] = "psd" + std::to_string(i);
    }

    sas_ = std::make_unique<sas::SasServer>(sas::SasConfig{c_.window_s, c_.puzzle_window_s, c_.kappa, false}, sig_,
                                            issuer_.keys.public_key, ring_, sok_);
    sas_->advance(c_.start_s);
    services_.push_back(std::make_unique<onion::Service>(
        kSasId, [this](NodeId, ByteSpan request) { return sas_->handle_frame(request); }));
    net_.attach(kSasId, *services_.back());
    report_.roles[kSasId] = "sas";

    for (unsigned i = 0; i < c_.n_relays; ++i) {
      relays_.push_back(std::make_unique<onion::Relay>(kRelayBase + i, onion::kAnyRole, kem_, rng_));
      net_.attach(kRelayBase + i, *relays_.back());
      directory_.push_back(relays_.back()->directory_entry());
      report_.roles[kRelayBase + i] = "relay" + std::to_string(i);
    }

    // The reserved access point hands the foreign-window attacker a proof
    // one beacon window before the run starts.
    if (c_.attacks) {
      attacker_ = make_endpoint(kAttackerBase, "attacker");
      auto& reserved = *ap_nodes_.back();
      reserved.ap().advance(window_ - 1, rng_);
      stale_pol_ = obtain_pol(*attacker_, reserved, -1);
      check(stale_pol_.has_value(), "reserved AP refused the stale-window proof");
    }
    for (auto& ap : aps_) ap->advance(window_, rng_);
    report_.metrics.setup_us = elapsed_us(t0);
  }

  std::unique_ptr<Endpoint> make_endpoint(NodeId onion_id, const std::string& label) {
    const NodeId radio = onion_id + kRadioOffset;
    auto e = std::make_unique<Endpoint>(onion_id, radio, net_, kem_, c_.seed, label);
    report_.roles[onion_id] = label;
    report_.roles[radio] = label + "-radio";
    return e;
  }

  double distance_of(NodeId) const { return c_.client_distance_m; }

  void advance_clock(std::uint64_t now) {
    const auto window = now / c_.window_s;
    if (window <= window_) return;
    window_ = window;
    for (auto& ap : aps_) ap->advance(window_, rng_);
    for (auto& p : psds_) p->refresh_puzzles(now);
    sas_->advance(now);
    now_ = now;
    event(Phase::kSetup, "window", -1, std::to_string(window_));
  }

  Bytes psd_handler(unsigned i, bool byzantine, ByteSpan request) {
    if (request.empty()) return {};
    auto& node = *psds_[i];
    const auto body = request.subspan(1);
    if (request[0] == kOopHandshake) {
      try {
        const auto hs = node.oop_handshake();
        ByteWriter w;
        w.u64(hs.session);
        w.raw(hs.seed);
        return std::move(w).take();
      } catch (const Error&) {
        return {};
      }
    }
    if (request[0] != kSpectrumQuery) return {};
    auto reply = node.handle_frame(body);
    if (!byzantine) return reply;
    // Corrupt every field element of an accepted FTR answer.
    auto decoded = psd::SpectrumReply::decode(reply);
    if (!decoded.accepted()) return reply;
    auto values = pir::decode_field_elements(decoded.response.payload);
    for (auto& v : values) v = (v + 1) % c_.ftr_modulus;
    decoded.response.payload = pir::encode_field_elements(values);
    return decoded.encode();
  }

  // Radio exchange with an access point; returns the proof on success.
  std::optional<pol::ProofOfLocation> obtain_pol(Endpoint& e, ApNode& ap, std::int64_t actor,
                                                 pol::LocationCommitment* commitment_out = nullptr) {
    const auto& beacon = *ap.ap().latest();
    net_.send(ap.ap_node_id(), e.radio_id, encode_beacon(beacon));
    net_.run();
    auto heard = e.radio.take();
    if (!heard) return std::nullopt;
    ByteReader br(*heard);
    br.u8();
    const auto b = read_beacon(br);
    const pol::Location where{static_cast<std::uint64_t>(e.radio_id), b.ap};
    const auto commitment = pol::commit_location(where, b, e.rng);
    ByteWriter req;
    req.u8(kPolRequestFrame);
    req.u32(b.ap);
    req.u64(b.window);
    req.raw(b.nonce);
    req.raw(commitment.digest);
    net_.send(e.radio_id, ap.ap_node_id(), std::move(req).take());
    net_.run();
    auto answer = e.radio.take();
    if (!answer) return std::nullopt;
    ByteReader ar(*answer);
    if (ar.u8() != kPolReplyFrame) return std::nullopt;
    const auto status = ar.u8();
    event(Phase::kPol, "pol", actor, status == 0 ? "accepted" : "status " + std::to_string(status));
    if (status != static_cast<std::uint8_t>(pol::PolStatus::kAccepted)) return std::nullopt;
    auto proof = pol::ProofOfLocation::decode(ar.raw(ar.remaining()));
    if (!pol::pol_verify(proof, *ring_, *sok_) || proof.commitment != commitment.digest) return std::nullopt;
    if (commitment_out) *commitment_out = commitment;
    return proof;
  }

  std::uint32_t circuit_to(Endpoint& e, NodeId destination) {
    auto it = e.circuits.find(destination);
    if (it != e.circuits.end() && e.onion->circuit(it->second).state == onion::CircuitState::kOpen) return it->second;
    const auto circ = e.onion->build_circuit(directory_, e.rng);
    e.circuits[destination] = circ;
    return circ;
  }

  Bytes psd_request(Endpoint& e, unsigned psd, std::uint8_t type, ByteSpan body) {
    return e.onion->request(circuit_to(e, kPsdBase + psd), kPsdBase + psd, tagged(type, body));
  }

  // Queries every replica for row theta and reconstructs it.
  PirRetrieval retrieve(Endpoint& e, std::uint64_t theta, const pol::ProofOfLocation& proof, std::int64_t actor,
                        ClientTrace* trace) {
    PirRetrieval out;
    auto t0 = Clock::now();
    std::vector<pir::PirMessage> queries;
    std::vector<std::uint64_t> sessions;
    switch (c_.scheme) {
      case PirScheme::kEns: {
        const auto q = pir::ens_query_gen(theta, c_.db_rows, c_.n_psd, e.rng);
        for (unsigned i = 0; i < c_.n_psd; ++i) {
          queries.push_back({PirScheme::kEns, static_cast<std::uint8_t>(i), pir::encode_bits(q.shares[i])});
        }
        break;
      }
      case PirScheme::kFtr: {
        const auto q = pir::ftr_query_gen(theta, c_.db_rows, c_.n_psd, c_.ftr_t, c_.ftr_modulus, e.rng);
        for (unsigned i = 0; i < c_.n_psd; ++i) {
          queries.push_back({PirScheme::kFtr, static_cast<std::uint8_t>(i), pir::encode_field_elements(q.per_server[i])});
        }
        break;
      }
      case PirScheme::kOop: {
        std::vector<pir::OopSeed> seeds;
        for (unsigned i = 0; i < c_.n_psd; ++i) {
          const auto reply = psd_request(e, i, kOopHandshake, {});
          if (reply.size() != 8 + 16) {
            event(Phase::kQuery, "handshake", actor, "psd" + std::to_string(i) + " backpressure");
            return out;
          }
          ByteReader r(reply);
          sessions.push_back(r.u64());
          seeds.push_back(r.array<16>());
        }
        const auto qs = pir::oop_query_gen(theta, seeds, *geometry_);
        for (unsigned i = 0; i < c_.n_psd; ++i) {
          queries.push_back({PirScheme::kOop, static_cast<std::uint8_t>(i), pir::encode_oop_query(sessions[i], qs[i])});
        }
        break;
      }
      case PirScheme::kNone:
        break;
    }
    if (trace) trace->query_us += elapsed_us(t0);
    event(Phase::kQuery, "query", actor);

    t0 = Clock::now();
    for (unsigned i = 0; i < c_.n_psd; ++i) {
      psd::SpectrumQuery sq{static_cast<std::uint64_t>(i), queries[i], proof};
      const auto raw = psd_request(e, i, kSpectrumQuery, sq.encode());
      out.replies.push_back(psd::SpectrumReply::decode(raw));
    }
    if (trace) trace->response_us += elapsed_us(t0);
    std::string codes;
    for (const auto& r : out.replies) codes += r.accepted() ? "ok " : std::string(psd::reject_name(*r.rejection)) + " ";
    event(Phase::kQuery, "response", actor, codes);

    t0 = Clock::now();
    try {
      switch (c_.scheme) {
        case PirScheme::kEns: {
          std::vector<std::optional<Bytes>> parts;
          for (const auto& r : out.replies) {
            parts.push_back(r.accepted() ? std::optional<Bytes>(r.response.payload) : std::nullopt);
          }
          out.block = pir::ens_reconstruct(parts);
          break;
        }
        case PirScheme::kFtr: {
          std::vector<pir::FtrResponse> responses;
          for (unsigned i = 0; i < c_.n_psd; ++i) {
            if (out.replies[i].accepted()) {
              responses.push_back({i, pir::decode_field_elements(out.replies[i].response.payload)});
            }
          }
          pir::FtrDecodeReport report;
          out.block = pir::ftr_reconstruct(responses, c_.ftr_t, c_.ftr_modulus, std::nullopt, &report);
          out.suspected = report.suspected;
          break;
        }
        case PirScheme::kOop: {
          std::vector<std::optional<Bytes>> parts;
          for (const auto& r : out.replies) {
            parts.push_back(r.accepted() ? std::optional<Bytes>(pir::decode_oop_response(r.response.payload).second)
                                         : std::nullopt);
          }
          out.block = pir::oop_reconstruct(parts);
          break;
        }
        case PirScheme::kNone:
          break;
      }
    } catch (const Error& err) {
      event(Phase::kQuery, "reconstruct", actor, err.what());
      return out;
    }
    if (trace) trace->reconstruct_us += elapsed_us(t0);
    event(Phase::kQuery, "reconstruct", actor, "ok");
    return out;
  }

  sas::ServiceDecision submit(Endpoint& e, const sas::ServiceRequest& req) {
    return sas::ServiceDecision::decode(e.onion->request(circuit_to(e, kSasId), kSasId, req.encode()));
  }

  void pick_rows() {
    std::vector<std::uint64_t> rows(c_.db_rows);
    std::iota(rows.begin(), rows.end(), 0);
    SeededRng pick = rng_.fork("rows");
    for (std::uint32_t u = 0; u < c_.n_users; ++u) {
      const auto j = u + pick.uniform_below(rows.size() - u);
      std::swap(rows[u], rows[j]);
    }
    rows.resize(c_.n_users);
    thetas_ = std::move(rows);
  }

  void honest_client(std::uint32_t u, std::uint32_t ap, std::uint32_t round) {
    auto e = make_endpoint(kClientBase + 1 + u, "client" + std::to_string(u));
    ClientTrace trace;
    trace.user = u;
    trace.theta = thetas_[u];
    trace.ap = ap;
    trace.round = round;
    const auto bytes0 = net_.bytes_delivered();
    const std::string who = "client " + std::to_string(u);

    auto t0 = Clock::now();
    pol::LocationCommitment commitment;
    auto proof = obtain_pol(*e, *ap_nodes_[ap], u, &commitment);
    trace.pol_us = elapsed_us(t0);
    if (!proof) {
      check(false, who + ": no proof of location");
      report_.clients.push_back(trace);
      return;
    }

    auto got = retrieve(*e, trace.theta, *proof, u, &trace);
    for (auto s : got.suspected) report_.byzantine_suspected.push_back(s);
    if (!got.block) {
      check(false, who + ": row not reconstructed");
      report_.clients.push_back(trace);
      return;
    }
    const auto expected = oracle_db_.row_bytes(trace.theta);
    check(std::equal(expected.begin(), expected.end(), got.block->begin(), got.block->end()),
          who + ": reconstructed row differs from the database");

    t0 = Clock::now();
    std::optional<sas::Token> token;
    try {
      const auto block = db::DbEntryBlock::decode(*got.block);
      sas::TokenOptions opts;
      opts.hct.counter_start = std::nullopt;
      opts.hct.rng = &e->rng;
      token = sas::create_token(block, trace.theta, *sig_, issuer_.keys.public_key, psds_[0]->puzzle_window(), opts);
      event(Phase::kToken, "solve", u, "ok");
    } catch (const Error& err) {
      event(Phase::kToken, "solve", u, err.what());
    }
    trace.solve_us = elapsed_us(t0);
    if (!token) {
      check(false, who + ": token not created");
      report_.clients.push_back(trace);
      return;
    }

    t0 = Clock::now();
    sas::ServiceRequest req{*token, *proof, commitment.digest, commitment.opening};
    const auto decision = submit(*e, req);
    trace.service_us = elapsed_us(t0);
    trace.granted = decision.granted();
    event(Phase::kService, "service", u, std::string(sas::stage_name(decision.stage)));
    check(trace.granted, who + ": not granted (stage " + std::string(sas::stage_name(decision.stage)) + ")");
    trace.bytes_sent = net_.bytes_delivered() - bytes0;
    report_.honest_granted += trace.granted;
    if (u == 0) {
      first_token_ = token;
      first_pol_ = proof;
      first_commitment_ = commitment;
      first_block_ = got.block;
    }
    report_.clients.push_back(trace);
  }

  void record_attack(const std::string& name, const std::string& expected, const std::string& observed) {
    report_.attacks.push_back({name, expected, observed});
    event(Phase::kService, "attack", -1, name + " -> " + observed);
    check(expected == observed, "attack " + name + ": expected " + expected + ", observed " + observed);
  }

  static std::string psd_code(const psd::SpectrumReply& r) {
    return r.accepted() ? "accepted" : "psd:" + std::string(psd::reject_name(*r.rejection));
  }
  static std::string sas_code(const sas::ServiceDecision& d) {
    return d.granted() ? "granted" : "sas:" + std::string(sas::stage_name(d.stage));
  }

  psd::SpectrumReply single_query(Endpoint& e, unsigned psd_index, const pol::ProofOfLocation& proof,
                                  std::uint64_t theta, std::uint64_t id) {
    psd::SpectrumQuery sq;
    sq.request_id = id;
    sq.pol = proof;
    switch (c_.scheme) {
      case PirScheme::kEns:
      case PirScheme::kOop: {
        // The admission checks run before the PIR payload is looked at, so an
        // ENS-shaped share serves for both XOR schemes.
        const auto q = pir::ens_query_gen(theta, c_.db_rows, c_.n_psd, e.rng);
        sq.query = {PirScheme::kEns, static_cast<std::uint8_t>(psd_index), pir::encode_bits(q.shares[psd_index])};
        if (c_.scheme == PirScheme::kOop) sq.query.scheme = PirScheme::kOop;
        break;
      }
      case PirScheme::kFtr: {
        const auto q = pir::ftr_query_gen(theta, c_.db_rows, c_.n_psd, c_.ftr_t, c_.ftr_modulus, e.rng);
        sq.query = {PirScheme::kFtr, static_cast<std::uint8_t>(psd_index),
                    pir::encode_field_elements(q.per_server[psd_index])};
        break;
      }
      case PirScheme::kNone:
        break;
    }
    return psd::SpectrumReply::decode(psd_request(e, psd_index, kSpectrumQuery, sq.encode()));
  }

  void attacks() {
    auto& a = *attacker_;
    if (!first_pol_ || !first_token_ || !first_block_) {
      check(false, "attacks need a completed honest client 0");
      return;
    }
    const auto theta0 = thetas_[0];

    // Replayed PoL: client 0's proof was already admitted this window.
    record_attack("replayed-pol", "psd:rate-limited", psd_code(single_query(a, 0, *first_pol_, theta0, 1)));

    // Wrong ring: a proof from access points outside the deployment.
    {
      std::vector<pol::LrsKeyPair> rogue_keys;
      std::vector<Digest> rogue_pks;
      for (int i = 0; i < 4; ++i) {
        rogue_keys.push_back(pol::lrs_keygen(a.rng));
        rogue_pks.push_back(rogue_keys.back().public_key);
      }
      auto rogue_ring = std::make_shared<pol::RingContext>(rogue_pks);
      auto rogue_sok = std::make_shared<pol::IdealAttestor>(sig_, a.rng);
      pol::AccessPointConfig ac;
      ac.id = 7777;
      pol::AccessPoint rogue(ac, rogue_keys[0], rogue_ring, rogue_sok);
      const auto& beacon = rogue.advance(window_, a.rng);
      auto client = pol::pol_request({1, 1}, beacon, pol::expected_rss(1), pol::expected_rtt(1), a.rng);
      const auto proof = *rogue.respond(client.request, a.rng).proof;
      record_attack("wrong-ring", "psd:bad-proof", psd_code(single_query(a, 0, proof, theta0, 2)));
    }

    const auto block = db::DbEntryBlock::decode(*first_block_);
    sas::TokenOptions opts;
    opts.hct.counter_start = std::nullopt;
    opts.hct.rng = &a.rng;

    // Foreign-window PoL with an otherwise valid, freshly solved token.
    {
      const auto token = sas::create_token(block, theta0, *sig_, issuer_.keys.public_key, psds_[0]->puzzle_window(), opts);
      sas::ServiceRequest req{token, *stale_pol_, stale_pol_->commitment, std::nullopt};
      record_attack("foreign-window-pol", "sas:pol", sas_code(submit(a, req)));
    }

    // Unsigned puzzle: the attacker binds its own puzzle and skips the
    // issuer signature. An honest client would refuse it before solving.
    {
      db::DbEntryBlock forged = block;
      db::BindOptions bind;
      bind.hct_leaves = c_.hct_leaves;
      forged.puzzles = {{c_.pow, c_.kappa, db::generate_puzzle(c_.pow, c_.kappa, bind, a.rng)}};
      forged.issuer_sig.assign(sig_->signature_size(), 0);
      bool refused = false;
      try {
        sas::create_token(forged, theta0, *sig_, issuer_.keys.public_key, psds_[0]->puzzle_window(), opts);
      } catch (const Error& err) {
        refused = err.code() == Errc::kProtocol;
      }
      check(refused, "client solved an unsigned puzzle");
      sas::Token token;
      token.theta = theta0;
      token.validity_window = forged.validity_window;
      token.puzzles = forged.puzzles;
      token.issuer_sig = forged.issuer_sig;
      if (c_.pow == PowKind::kHct) {
        const auto puzzle = pow::HctPuzzle::deserialize(token.puzzles[0].bytes);
        const auto sol = pow::hct_solve(puzzle, opts.hct);
        token.solution = pow::hct_prove(puzzle, sol, sas::token_context(theta0, token.validity_window, token.puzzles[0]))
                             .serialize();
      } else {
        const auto puzzle = pow::LbpPuzzle::deserialize(token.puzzles[0].bytes);
        token.solution = pow::lbp_solve(puzzle).serialize(puzzle);
      }
      sas::ServiceRequest req{token, *first_pol_, first_commitment_->digest, std::nullopt};
      const auto before = sas_->counters().pow_verifications;
      record_attack("unsigned-puzzle", "sas:signature", sas_code(submit(a, req)));
      check(sas_->counters().pow_verifications == before, "unsigned puzzle reached proof-of-work verification");
    }

    // Reused token: client 0's token a second time.
    {
      sas::ServiceRequest req{*first_token_, *first_pol_, first_commitment_->digest, first_commitment_->opening};
      record_attack("reused-token", "sas:replay", sas_code(submit(a, req)));
    }
  }

  void flood() {
    auto f = make_endpoint(kAttackerBase + 1, "flooder");
    auto& ap = *ap_nodes_.back();
    const auto theta = thetas_[0];
    for (std::uint32_t i = 0; i < c_.flood; ++i) {
      const auto proof = obtain_pol(*f, ap, -1);
      if (!proof) {
        check(false, "flooder could not obtain a proof");
        return;
      }
      const auto reply = single_query(*f, 0, *proof, theta, i);
      if (reply.accepted()) ++report_.flood_accepted;
      if (reply.rejection == psd::Reject::kRateLimited) ++report_.flood_rate_limited;
    }
    event(Phase::kQuery, "flood", -1,
          std::to_string(report_.flood_accepted) + " accepted, " + std::to_string(report_.flood_rate_limited) +
              " rate-limited");
    check(report_.flood_accepted == 1, "flood: expected exactly one accepted query");
    check(report_.flood_rate_limited + 1 == c_.flood, "flood: every other query must be rate-limited");
  }

  void finish() {
    auto& m = report_.metrics;
    for (const auto& t : report_.clients) {
      m.pol_us += t.pol_us;
      m.query_us += t.query_us;
      m.response_us += t.response_us;
      m.reconstruct_us += t.reconstruct_us;
      m.solve_us += t.solve_us;
      m.service_us += t.service_us;
    }
    m.bytes_on_wire = net_.bytes_delivered();
    m.frames = net_.frames_delivered();
    m.network_time_us = net_.now();
    m.outcomes["honest_granted"] = report_.honest_granted;
    m.outcomes["honest_total"] = c_.n_users;
    for (const auto& a : report_.attacks) m.outcomes["attack_" + a.name + "_ok"] = a.ok();
    m.outcomes["flood_accepted"] = report_.flood_accepted;
    m.outcomes["flood_rate_limited"] = report_.flood_rate_limited;
    std::uint64_t psd_accepted = 0, psd_rejected = 0;
    for (const auto& p : psds_) {
      psd_accepted += p->stats().accepted;
      psd_rejected += p->stats().bad_proof + p->stats().rate_limited + p->stats().protocol;
    }
    m.outcomes["psd_accepted"] = psd_accepted;
    m.outcomes["psd_rejected"] = psd_rejected;

    check(net_.frames_sent() == net_.frames_delivered(), "frames left in flight");
    report_.frames = net_.frames();
    for (const auto& f : report_.frames) {
      if (!report_.roles.contains(f.from) || !report_.roles.contains(f.to)) {
        check(false, "frame without hop attribution");
        break;
      }
    }
    report_.network_digest = net_.transcript_digest();
    crypto::Sha256 h;
    h.update(report_.network_digest);
    for (const auto& e : report_.events) {
      h.update_u32(static_cast<std::uint32_t>(e.phase));
      h.update_u64(static_cast<std::uint64_t>(e.actor));
      h.update(as_bytes(e.step));
      h.update_u32(static_cast<std::uint32_t>(e.detail.size()));
      h.update(as_bytes(e.detail));
    }
    report_.transcript_digest = h.finish();
  }

  SimConfig c_;
  SeededRng rng_;
  onion::SimNetwork net_;
  SimReport report_;
  std::shared_ptr<const crypto::SignatureScheme> sig_;
  std::shared_ptr<const crypto::Kem> kem_;
  std::vector<pol::LrsKeyPair> ap_keys_;
  std::shared_ptr<const pol::RingContext> ring_;
  std::shared_ptr<const pol::SokBackend> sok_;
  std::vector<std::unique_ptr<pol::AccessPoint>> aps_;
  std::vector<std::unique_ptr<ApNode>> ap_nodes_;
  db::PuzzleIssuer issuer_;
  db::DbMatrix oracle_db_;
  std::shared_ptr<const kernels::Kernel> kernel_;
  std::shared_ptr<psd::PolLog> shared_log_;
  std::optional<pir::OopGeometry> geometry_;
  std::vector<std::unique_ptr<psd::PsdNode>> psds_;
  std::vector<std::unique_ptr<onion::Service>> services_;
  std::unique_ptr<sas::SasServer> sas_;
  std::vector<std::unique_ptr<onion::Relay>> relays_;
  onion::Directory directory_;
  std::unique_ptr<Endpoint> attacker_;
  std::optional<pol::ProofOfLocation> stale_pol_;
  std::vector<std::uint64_t> thetas_;
  std::uint64_t window_ = 0;
  std::uint64_t now_ = 0;

  std::optional<sas::Token> first_token_;
  std::optional<pol::ProofOfLocation> first_pol_;
  std::optional<pol::LocationCommitment> first_commitment_;
  std::optional<Bytes> first_block_;
};

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) fail(Errc::kUsage, "cannot write " + path.string());
  out << text;
}

}  // namespace

SimReport run_sim(const SimConfig& config) {
  validate(config);
  Simulation sim(config);
  auto report = sim.run();
  if (!config.csv_dir.empty()) write_csv(report, config.csv_dir);
  return report;
}

void write_csv(const SimReport& report, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const fs::path base(dir);
  struct Column {
    const char* phase;
    double ClientTrace::*field;
  };
  const Column columns[] = {
      {"pol", &ClientTrace::pol_us},         {"query", &ClientTrace::query_us},
      {"response", &ClientTrace::response_us}, {"reconstruct", &ClientTrace::reconstruct_us},
      {"solve", &ClientTrace::solve_us},     {"service", &ClientTrace::service_us},
  };
  for (const auto& col : columns) {
    std::string text = "user,theta,ap,round,wall_us\n";
    for (const auto& t : report.clients) {
      text += std::to_string(t.user) + "," + std::to_string(t.theta) + "," + std::to_string(t.ap) + "," +
              std::to_string(t.round) + "," + std::to_string(t.*col.field) + "\n";
    }
    write_file(base / (std::string("phase_") + col.phase + ".csv"), text);
  }
  const auto& m = report.metrics;
  std::string summary = "metric,value\n";
  auto add = [&](const std::string& k, const std::string& v) { summary += k + "," + v + "\n"; };
  add("setup_us", std::to_string(m.setup_us));
  add("pol_us", std::to_string(m.pol_us));
  add("query_us", std::to_string(m.query_us));
  add("response_us", std::to_string(m.response_us));
  add("reconstruct_us", std::to_string(m.reconstruct_us));
  add("solve_us", std::to_string(m.solve_us));
  add("service_us", std::to_string(m.service_us));
  add("bytes_on_wire", std::to_string(m.bytes_on_wire));
  add("frames", std::to_string(m.frames));
  add("network_time_us", std::to_string(m.network_time_us));
  for (const auto& [k, v] : m.outcomes) add(k, std::to_string(v));
  add("transcript_digest", to_hex(report.transcript_digest));
  write_file(base / "summary.csv", summary);

  std::string attacks = "attack,expected,observed,ok\n";
  for (const auto& a : report.attacks) attacks += a.name + "," + a.expected + "," + a.observed + "," + (a.ok() ? "1" : "0") + "\n";
  write_file(base / "attacks.csv", attacks);

  std::string frames = "seq,sent_us,delivered_us,from,to,bytes,sha256\n";
  auto role = [&](onion::NodeId id) {
    auto it = report.roles.find(id);
    return it == report.roles.end() ? std::to_string(id) : it->second;
  };
  for (const auto& f : report.frames) {
    frames += std::to_string(f.seq) + "," + std::to_string(f.sent) + "," + std::to_string(f.delivered) + "," +
              role(f.from) + "," + role(f.to) + "," + std::to_string(f.bytes) + "," + to_hex(f.hash) + "\n";
  }
  write_file(base / "frames.csv", frames);
}

}  // namespace qpadl::sim
