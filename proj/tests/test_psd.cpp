#include <gtest/gtest.h>

#include "qpadl/pir/ens.hpp"
#include "qpadl/pir/ftr.hpp"
#include "qpadl/psd/psd.hpp"
#include "support.hpp"
#include "world.hpp"

using namespace qpadl;
using namespace qpadl::psd;
using qpadl::test::World;

namespace {

PsdConfig ens_config(unsigned index) {
  PsdConfig c;
  c.index = index;
  c.scheme = PirScheme::kEns;
  return c;
}

std::unique_ptr<PsdNode> make_psd(World& w, PsdConfig config, std::shared_ptr<PolLog> log = nullptr) {
  auto node = std::make_unique<PsdNode>(std::move(config), w.db, w.issuer, w.ring, w.sok, w.kernel, std::move(log));
  node->refresh_puzzles(World::kStart);
  return node;
}

SpectrumQuery ens_request(const pir::BitVector& share, unsigned server, const pol::ProofOfLocation& proof,
                          std::uint64_t id = 1) {
  return {id, {PirScheme::kEns, static_cast<std::uint8_t>(server), pir::encode_bits(share)}, proof};
}

}  // namespace

TEST(Psd, FirstQueryAnsweredAndReconstructs) {
  World w(1);
  auto a = make_psd(w, ens_config(0));
  auto b = make_psd(w, ens_config(1));
  const std::uint64_t theta = 13;
  const auto q = pir::ens_query_gen(theta, w.db.rows(), 2, w.rng);
  const auto ra = a->handle_spectrum_query(ens_request(q.shares[0], 0, w.prove(0)));
  const auto rb = b->handle_spectrum_query(ens_request(q.shares[1], 1, w.prove(0)));
  ASSERT_TRUE(ra.accepted());
  ASSERT_TRUE(rb.accepted());
  std::vector<std::optional<Bytes>> parts{ra.response.payload, rb.response.payload};
  EXPECT_EQ(pir::ens_reconstruct(parts), test::row_of(w.db, theta));
  const auto block = db::DbEntryBlock::decode(pir::ens_reconstruct(parts));
  db::GridCoordinate coord;
  std::uint32_t channel = 0, tw = 0;
  db::RowMajorIndex(w.limits.dims).decode(theta, coord, channel, tw);
  EXPECT_EQ(block.record.coord, coord);
  EXPECT_EQ(block.record.channel, channel);
}

TEST(Psd, ReplayedProofIsRateLimited) {
  World w(2);
  auto a = make_psd(w, ens_config(0));
  const auto proof = w.prove(3);
  const auto share = pir::BitVector::unit(w.db.rows(), 0);
  EXPECT_TRUE(a->handle_spectrum_query(ens_request(share, 0, proof)).accepted());
  const auto again = a->handle_spectrum_query(ens_request(share, 0, proof));
  ASSERT_FALSE(again.accepted());
  EXPECT_EQ(*again.rejection, Reject::kRateLimited);
}

TEST(Psd, FreshCommitmentSameApSameWindowStillLinked) {
  World w(3);
  auto a = make_psd(w, ens_config(0));
  pol::LocationCommitment c1, c2;
  const auto p1 = w.prove(2, &c1);
  const auto p2 = w.prove(2, &c2);
  ASSERT_NE(c1.opening.r, c2.opening.r);
  ASSERT_NE(p1.commitment, p2.commitment);
  EXPECT_EQ(p1.signature.tag, p2.signature.tag);
  const auto share = pir::BitVector::unit(w.db.rows(), 1);
  EXPECT_TRUE(a->handle_spectrum_query(ens_request(share, 0, p1)).accepted());
  EXPECT_EQ(*a->handle_spectrum_query(ens_request(share, 0, p2)).rejection, Reject::kRateLimited);
}

TEST(Psd, BadProofReportedBeforeRateLimit) {
  World w(4);
  auto a = make_psd(w, ens_config(0));
  const auto proof = w.prove(1);
  const auto share = pir::BitVector::unit(w.db.rows(), 1);
  ASSERT_TRUE(a->handle_spectrum_query(ens_request(share, 0, proof)).accepted());
  // Same (e_ID, tag), so it is linked, but the signature no longer verifies.
  auto tampered = proof;
  tampered.commitment[0] ^= 1;
  EXPECT_EQ(*a->handle_spectrum_query(ens_request(share, 0, tampered)).rejection, Reject::kBadProof);
  auto broken = proof;
  broken.signature.proof.back() ^= 0x80;
  EXPECT_EQ(*a->handle_spectrum_query(ens_request(share, 0, broken)).rejection, Reject::kBadProof);
  EXPECT_EQ(a->stats().rate_limited, 0u);
  EXPECT_EQ(a->stats().bad_proof, 2u);
}

TEST(Psd, ProofFromAnotherWindowIsBadProof) {
  World w(5);
  auto a = make_psd(w, ens_config(0));
  const auto old = w.prove(0);
  const auto later = World::kStart + 2 * pol::kBeaconPeriodSeconds;
  w.advance_aps(later);
  a->refresh_puzzles(later);
  const auto share = pir::BitVector::unit(w.db.rows(), 0);
  EXPECT_EQ(*a->handle_spectrum_query(ens_request(share, 0, old)).rejection, Reject::kBadProof);
}

TEST(Psd, WindowRolloverRestoresAdmissibility) {
  World w(6);
  auto a = make_psd(w, ens_config(0));
  const auto share = pir::BitVector::unit(w.db.rows(), 2);
  const auto first = w.prove(4);
  EXPECT_TRUE(a->handle_spectrum_query(ens_request(share, 0, first)).accepted());
  EXPECT_FALSE(a->handle_spectrum_query(ens_request(share, 0, w.prove(4))).accepted());

  const auto next = World::kStart + pol::kBeaconPeriodSeconds;
  w.advance_aps(next);
  a->refresh_puzzles(next);
  EXPECT_EQ(a->pol_log().size(), 0u);
  const auto fresh = w.prove(4);
  EXPECT_NE(fresh.signature.event_id, first.signature.event_id);
  EXPECT_TRUE(a->handle_spectrum_query(ens_request(share, 0, fresh)).accepted());
}

TEST(Psd, AcceptedQueriesBoundedByDistinctAps) {
  for (std::size_t m = 1; m <= 4; ++m) {
    World fresh(70 + m);
    auto node = make_psd(fresh, ens_config(0));
    const auto share = pir::BitVector::unit(fresh.db.rows(), 0);
    std::size_t accepted = 0;
    for (int round = 0; round < 10; ++round) {
      for (std::size_t ap = 0; ap < m; ++ap) {
        accepted += node->handle_spectrum_query(ens_request(share, 0, fresh.prove(ap))).accepted();
      }
    }
    EXPECT_EQ(accepted, m);
  }
}

TEST(Psd, FloodThroughOneApAcceptsOnce) {
  World w(8);
  auto a = make_psd(w, ens_config(0));
  const auto share = pir::BitVector::unit(w.db.rows(), 0);
  std::size_t accepted = 0, limited = 0;
  for (int i = 0; i < 100; ++i) {
    const auto reply = a->handle_spectrum_query(ens_request(share, 0, w.prove(5), i));
    accepted += reply.accepted();
    limited += reply.rejection == Reject::kRateLimited;
  }
  EXPECT_EQ(accepted, 1u);
  EXPECT_EQ(limited, 99u);
}

TEST(Psd, SchemeOrServerMismatchIsProtocolError) {
  World w(9);
  auto a = make_psd(w, ens_config(0));
  const auto share = pir::BitVector::unit(w.db.rows(), 0);
  auto req = ens_request(share, 0, w.prove(0));
  req.query.scheme = PirScheme::kFtr;
  EXPECT_EQ(*a->handle_spectrum_query(req).rejection, Reject::kProtocol);
  auto wrong_server = ens_request(share, 1, w.prove(1));
  EXPECT_EQ(*a->handle_spectrum_query(wrong_server).rejection, Reject::kProtocol);
  auto short_share = ens_request(pir::BitVector::unit(8, 0), 0, w.prove(2));
  EXPECT_EQ(*a->handle_spectrum_query(short_share).rejection, Reject::kProtocol);
  const Bytes garbage{1, 2, 3};
  EXPECT_EQ(*SpectrumReply::decode(a->handle_frame(garbage)).rejection, Reject::kProtocol);
}

TEST(Psd, SharedLogEnforcesGlobalLimit) {
  World w(10);
  const auto share = pir::BitVector::unit(w.db.rows(), 0);
  const auto proof = w.prove(0);

  auto local_a = make_psd(w, ens_config(0));
  auto local_b = make_psd(w, ens_config(1));
  EXPECT_TRUE(local_a->handle_spectrum_query(ens_request(share, 0, proof)).accepted());
  EXPECT_TRUE(local_b->handle_spectrum_query(ens_request(share, 1, proof)).accepted());

  auto log = std::make_shared<PolLog>();
  auto shared_a = make_psd(w, ens_config(0), log);
  auto shared_b = make_psd(w, ens_config(1), log);
  EXPECT_TRUE(shared_a->handle_spectrum_query(ens_request(share, 0, proof)).accepted());
  EXPECT_EQ(*shared_b->handle_spectrum_query(ens_request(share, 1, proof)).rejection, Reject::kRateLimited);
}

TEST(Psd, BatchedFtrMatchesPerRequest) {
  World w(11);
  const unsigned servers = 3, t = 1;
  std::vector<std::unique_ptr<PsdNode>> nodes;
  for (unsigned i = 0; i < servers; ++i) {
    PsdConfig c;
    c.index = i;
    c.scheme = PirScheme::kFtr;
    nodes.push_back(make_psd(w, c));
  }
  const std::uint64_t thetas[] = {0, 5, 63};
  std::vector<pir::FtrQuery> queries;
  for (auto theta : thetas) queries.push_back(pir::ftr_query_gen(theta, w.db.rows(), servers, t, pir::kDefaultFtrModulus, w.rng));

  std::vector<std::vector<pir::FtrResponse>> per_theta(3);
  for (unsigned s = 0; s < servers; ++s) {
    std::vector<SpectrumQuery> batch;
    for (std::size_t k = 0; k < 3; ++k) {
      batch.push_back({k, {PirScheme::kFtr, static_cast<std::uint8_t>(s), pir::encode_field_elements(queries[k].per_server[s])},
                       w.prove(k)});
    }
    const auto replies = nodes[s]->handle_batch(batch);
    ASSERT_EQ(replies.size(), 3u);
    for (std::size_t k = 0; k < 3; ++k) {
      ASSERT_TRUE(replies[k].accepted());
      EXPECT_EQ(replies[k].request_id, k);
      const auto values = pir::decode_field_elements(replies[k].response.payload);
      EXPECT_EQ(values, pir::ftr_respond(queries[k].per_server[s], w.db, pir::kDefaultFtrModulus));
      per_theta[k].push_back({s, values});
    }
  }
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_EQ(pir::ftr_reconstruct(per_theta[k], t, pir::kDefaultFtrModulus), test::row_of(w.db, thetas[k]));
  }
}

TEST(Psd, OopReplicasAnswer) {
  World w(12);
  const unsigned n = 2;
  const auto geometry = pir::OopGeometry::cyclic(w.db.rows(), n, 0);
  std::vector<std::unique_ptr<PsdNode>> nodes;
  for (unsigned i = 0; i < n; ++i) {
    PsdConfig c;
    c.index = i;
    c.scheme = PirScheme::kOop;
    c.oop_geometry = geometry;
    c.bind_seed = 99;
    nodes.push_back(make_psd(w, c));
  }
  const std::uint64_t theta = 42;
  std::vector<pir::OopHandshake> hs;
  std::vector<pir::OopSeed> seeds;
  for (auto& node : nodes) {
    hs.push_back(node->oop_handshake());
    seeds.push_back(hs.back().seed);
  }
  const auto qs = pir::oop_query_gen(theta, seeds, geometry);
  std::vector<std::optional<Bytes>> parts;
  for (unsigned i = 0; i < n; ++i) {
    SpectrumQuery req{i, {PirScheme::kOop, static_cast<std::uint8_t>(i), pir::encode_oop_query(hs[i].session, qs[i])},
                      w.prove(i)};
    const auto reply = nodes[i]->handle_spectrum_query(req);
    ASSERT_TRUE(reply.accepted());
    parts.push_back(pir::decode_oop_response(reply.response.payload).second);
    // The session is single use.
    req.pol = w.prove(i + 4);
    EXPECT_EQ(*nodes[i]->handle_spectrum_query(req).rejection, Reject::kProtocol);
  }
  EXPECT_EQ(pir::oop_reconstruct(parts), test::row_of(w.db, theta));
}

TEST(Psd, FrameRoundTrip) {
  World w(13);
  auto a = make_psd(w, ens_config(0));
  const auto req = ens_request(pir::BitVector::unit(w.db.rows(), 9), 0, w.prove(0), 77);
  const auto decoded = SpectrumQuery::decode(req.encode());
  EXPECT_EQ(decoded.request_id, 77u);
  EXPECT_EQ(decoded.query, req.query);
  EXPECT_EQ(decoded.pol, req.pol);
  const auto reply = SpectrumReply::decode(a->handle_frame(req.encode()));
  ASSERT_TRUE(reply.accepted());
  EXPECT_EQ(reply.request_id, 77u);
  EXPECT_EQ(reply.response.payload, test::row_of(w.db, 9));
  const auto limited = SpectrumReply::decode(a->handle_frame(req.encode()));
  EXPECT_EQ(*limited.rejection, Reject::kRateLimited);
  EXPECT_EQ(limited.encode().size(), 9u);
}

TEST(Psd, SignPuzzleRoundTripAndFreshness) {
  World w(14, 8, 6, crypto::SignatureBackend::kMlDsa44);
  auto a = make_psd(w, ens_config(0));
  const auto block = db::DbEntryBlock::decode(w.db.row_bytes(3));
  const auto window = a->puzzle_window();
  const auto sig = a->sign_puzzle(3, block.puzzles, window, w.rng);
  EXPECT_EQ(sig.size(), 2420u);
  const auto& scheme = a->signature_scheme();
  EXPECT_EQ(db::check_puzzles(scheme, a->public_key(), 3, block.puzzles, window, sig, window), db::PuzzleCheck::kOk);
  const auto other = db::PuzzleIssuer::generate(crypto::SignatureBackend::kMlDsa44, w.rng);
  EXPECT_EQ(db::check_puzzles(scheme, other.keys.public_key, 3, block.puzzles, window, sig, window),
            db::PuzzleCheck::kBadSignature);
  EXPECT_EQ(db::check_puzzles(scheme, a->public_key(), 4, block.puzzles, window, sig, window),
            db::PuzzleCheck::kBadSignature);
  const auto past = a->sign_puzzle(3, block.puzzles, window - 1, w.rng);
  EXPECT_EQ(db::check_puzzles(scheme, a->public_key(), 3, block.puzzles, window - 1, past, window),
            db::PuzzleCheck::kStale);
}

TEST(Psd, RefreshRebindsIdenticallyAcrossReplicas) {
  World w(15);
  PsdConfig c = ens_config(0);
  c.pow = PowKind::kHct;
  c.difficulties = {5};
  c.bind_seed = 1234;
  auto a = make_psd(w, c);
  c.index = 1;
  auto b = make_psd(w, c);
  EXPECT_EQ(a->stats().rebinds, 0u);
  EXPECT_TRUE(a->db().same_payload(w.db));

  const auto next = World::kStart + 3600;
  a->refresh_puzzles(next);
  b->refresh_puzzles(next);
  EXPECT_EQ(a->stats().rebinds, 1u);
  EXPECT_EQ(a->puzzle_window(), db::validity_window_at(next));
  EXPECT_TRUE(a->db().same_payload(b->db()));
  EXPECT_FALSE(a->db().same_payload(w.db));
  for (std::uint64_t theta = 0; theta < w.db.rows(); theta += 7) {
    const auto before = db::DbEntryBlock::decode(w.db.row_bytes(theta));
    const auto after = db::DbEntryBlock::decode(a->db().row_bytes(theta));
    EXPECT_EQ(after.record, before.record);
    EXPECT_EQ(after.validity_window, a->puzzle_window());
    EXPECT_NE(after.puzzles, before.puzzles);
    EXPECT_EQ(db::check_puzzles(a->signature_scheme(), a->public_key(), theta, after.puzzles, after.validity_window,
                                after.issuer_sig, a->puzzle_window()),
              db::PuzzleCheck::kOk);
  }
  // Same window again: no work.
  a->refresh_puzzles(next + 10);
  EXPECT_EQ(a->stats().rebinds, 1u);
}
