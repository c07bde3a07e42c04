#include <gtest/gtest.h>

#include <algorithm>
#include <memory>
#include <set>

#include "qpadl/onion/onion.hpp"
#include "support.hpp"

using namespace qpadl;
using namespace qpadl::onion;
using qpadl::test::error_code;

namespace {

constexpr NodeId kClient = 100, kEntryId = 1, kMiddleId = 2, kExitId = 3, kServiceId = 50;

bool contains(const std::vector<Bytes>& frames, ByteSpan needle) {
  return std::any_of(frames.begin(), frames.end(), [&](const Bytes& f) {
    return std::search(f.begin(), f.end(), needle.begin(), needle.end()) != f.end();
  });
}

struct World {
  explicit World(crypto::KemBackend backend = crypto::KemBackend::kStub, std::uint64_t seed = 1)
      : kem(crypto::make_kem(backend)),
        rng(seed),
        net(NetworkConfig{}),
        entry(kEntryId, kEntry, kem, rng),
        middle(kMiddleId, kMiddle, kem, rng),
        exit(kExitId, kExit, kem, rng),
        service(kServiceId, [](NodeId, ByteSpan req) { return Bytes(req.begin(), req.end()); }),
        client(kClient, net, kem) {
    net.attach(kEntryId, entry);
    net.attach(kMiddleId, middle);
    net.attach(kExitId, exit);
    net.attach(kServiceId, service);
    directory = {entry.directory_entry(), middle.directory_entry(), exit.directory_entry()};
  }

  std::shared_ptr<const crypto::Kem> kem;
  SeededRng rng;
  SimNetwork net;
  Relay entry, middle, exit;
  Service service;
  OnionClient client;
  Directory directory;
};

}  // namespace

TEST(Cell, LayoutIs512Bytes) {
  Cell c;
  c.circ = 0x01020304;
  c.command = CellCommand::kRelayForward;
  c.payload[0] = 0xaa;
  c.payload[kCellPayload - 1] = 0xbb;
  const auto b = c.encode();
  ASSERT_EQ(b.size(), 512u);
  EXPECT_EQ(b[0], 0x04);
  EXPECT_EQ(b[3], 0x01);
  EXPECT_EQ(b[4], 3);
  EXPECT_EQ(b[5], 0xaa);
  EXPECT_EQ(b[511], 0xbb);
  const auto d = Cell::decode(b);
  EXPECT_EQ(d.payload, c.payload);
  EXPECT_EQ(error_code([&] { Cell::decode(ByteSpan(b).first(511)); }), Errc::kFormat);
}

TEST(Cell, FragmentRoundTrip) {
  SeededRng rng(2);
  for (std::size_t len : {0u, 1u, 440u, 441u, 442u, 5000u}) {
    const auto data = rng.bytes(len);
    const auto frags = fragment(RelayCommand::kData, 7, 9, data, layer_body_size(2));
    EXPECT_EQ(frags.size(), std::max<std::size_t>(1, (len + kDataPerCell - 1) / kDataPerCell));
    Reassembler r;
    std::optional<Reassembler::Message> done;
    for (auto it = frags.rbegin(); it != frags.rend(); ++it) {
      const auto body = it->encode(layer_body_size(2));
      ASSERT_EQ(body.size(), layer_body_size(2));
      done = r.add(Fragment::decode(body));
    }
    ASSERT_TRUE(done);
    EXPECT_EQ(done->data, data);
    EXPECT_EQ(done->destination, 9u);
  }
}

TEST(Onion, BuildTakesSixLinkRoundTrips) {
  World w;
  const auto circ = w.client.build_circuit(w.directory, w.rng);
  const auto& info = w.client.circuit(circ);
  EXPECT_EQ(info.state, CircuitState::kOpen);
  EXPECT_EQ(info.path, (std::array<NodeId, 3>{kEntryId, kMiddleId, kExitId}));
  EXPECT_EQ(info.build_time_us, 300000u);
}

TEST(Onion, HopKeysMatchKemReplay) {
  World w;
  SeededRng coins(77);
  const auto circ = w.client.build_circuit(w.directory, coins);
  const auto& info = w.client.circuit(circ);
  SeededRng replay(77);
  for (unsigned h = 0; h < kHops; ++h) {
    const auto enc = w.kem->encapsulate(w.directory[h].kem_public_key, replay);
    // The stub's secret key equals its public key.
    EXPECT_EQ(w.kem->decapsulate(w.directory[h].kem_public_key, enc.ciphertext), enc.shared_secret);
    EXPECT_EQ(info.keys[h], derive_hop_key(enc.shared_secret)) << "hop " << h;
  }
  EXPECT_NE(info.keys[0], info.keys[1]);
}

TEST(Onion, RelaysKnowOnlyTheirNeighbours) {
  World w;
  const auto circ = w.client.build_circuit(w.directory, w.rng);
  w.client.request(circ, kServiceId, Bytes{1, 2, 3});
  ASSERT_EQ(w.entry.log().size(), 1u);
  ASSERT_EQ(w.middle.log().size(), 1u);
  ASSERT_EQ(w.exit.log().size(), 1u);
  EXPECT_EQ(w.entry.log()[0].prev, kClient);
  EXPECT_EQ(w.entry.log()[0].next, kMiddleId);
  EXPECT_EQ(w.middle.log()[0].prev, kEntryId);
  EXPECT_EQ(w.middle.log()[0].next, kExitId);
  EXPECT_EQ(w.exit.log()[0].prev, kMiddleId);
  EXPECT_EQ(w.exit.log()[0].next, kServiceId);
}

TEST(Onion, SentinelNeverVisibleBeforeExit) {
  World w;
  const auto circ = w.client.build_circuit(w.directory, w.rng);
  const Bytes sentinel = {'S', 'E', 'N', 'T', 'I', 'N', 'E', 'L', '-', 'q', 'u', 'e', 'r', 'y', '-', '7'};
  Bytes msg;
  for (int i = 0; i < 100; ++i) msg.insert(msg.end(), sentinel.begin(), sentinel.end());
  EXPECT_EQ(w.client.request(circ, kServiceId, msg), msg);
  EXPECT_FALSE(contains(w.entry.trace(), sentinel));
  EXPECT_FALSE(contains(w.middle.trace(), sentinel));
  // The scan itself works: the exit hands plaintext to the destination.
  EXPECT_TRUE(contains(w.exit.trace(), sentinel));
}

TEST(Onion, ThreeLayerOpensPerForwardCell) {
  World w;
  const auto circ = w.client.build_circuit(w.directory, w.rng);
  const auto before = w.net.relay_layer_opens;
  w.client.request(circ, kServiceId, Bytes(10, 1));
  EXPECT_EQ(w.net.relay_layer_opens - before, 3u);
  const auto before2 = w.net.relay_layer_opens;
  w.client.request(circ, kServiceId, Bytes(kDataPerCell * 2 + 1, 2));
  EXPECT_EQ(w.net.relay_layer_opens - before2, 9u);
}

TEST(Onion, EmptyAndLargeMessagesRoundTrip) {
  World w;
  const auto circ = w.client.build_circuit(w.directory, w.rng);
  const auto frames0 = w.net.frames_delivered();
  EXPECT_EQ(w.client.request(circ, kServiceId, Bytes{}), Bytes{});
  // One cell per link each way: client-entry-middle-exit-service and back.
  EXPECT_EQ(w.net.frames_delivered() - frames0, 8u);
  const auto block = w.rng.bytes(50 * 1024);
  EXPECT_EQ(w.client.request(circ, kServiceId, block), block);
}

TEST(Onion, TamperAtMiddleTearsDown) {
  World w;
  const auto circ = w.client.build_circuit(w.directory, w.rng);
  w.net.set_tamper([](NodeId, NodeId to, Bytes& frame) {
    if (to == kMiddleId && frame[4] == static_cast<std::uint8_t>(CellCommand::kRelayForward)) frame[20] ^= 1;
  });
  EXPECT_EQ(error_code([&] { w.client.request(circ, kServiceId, Bytes{5}); }), Errc::kCircuit);
  EXPECT_EQ(w.service.requests(), 0u);
  EXPECT_EQ(w.client.circuit(circ).state, CircuitState::kClosed);
  EXPECT_EQ(w.entry.open_circuits(), 0u);
  EXPECT_EQ(w.middle.open_circuits(), 0u);
  EXPECT_EQ(w.exit.open_circuits(), 0u);
}

TEST(Onion, BuildFailures) {
  World w;
  Directory two(w.directory.begin(), w.directory.begin() + 2);
  EXPECT_EQ(error_code([&] { w.client.build_circuit(two, w.rng); }), Errc::kCircuit);
  // A directory that overstates the entry relay's roles: it refuses to be a middle.
  Directory lying = w.directory;
  lying[0].roles = kMiddle;
  lying[1].roles = kEntry;
  EXPECT_EQ(error_code([&] { w.client.build_circuit(lying, w.rng); }), Errc::kCircuit);
}

TEST(Onion, MlKemCircuit) {
  World w(crypto::KemBackend::kMlKem768);
  const auto circ = w.client.build_circuit(w.directory, w.rng);
  const auto msg = w.rng.bytes(3000);
  EXPECT_EQ(w.client.request(circ, kServiceId, msg), msg);
}

TEST(Onion, TranscriptIsDeterministic) {
  auto run = [] {
    World w(crypto::KemBackend::kMlKem768, 5);
    const auto circ = w.client.build_circuit(w.directory, w.rng);
    w.client.request(circ, kServiceId, Bytes(700, 3));
    return w.net.transcript_digest();
  };
  EXPECT_EQ(run(), run());
}

// Relays extending toward each other share a link; their circuit ids must
// not collide on it.
TEST(Onion, CrossingCircuitsOnSharedLinks) {
  auto kem = crypto::make_kem(crypto::KemBackend::kStub);
  SeededRng rng(9);
  SimNetwork net(NetworkConfig{});
  std::vector<std::unique_ptr<Relay>> relays;
  Directory dir;
  for (NodeId id = 1; id <= 3; ++id) {
    relays.push_back(std::make_unique<Relay>(id, kAnyRole, kem, rng));
    net.attach(id, *relays.back());
    dir.push_back(relays.back()->directory_entry());
  }
  Service echo(kServiceId, [](NodeId, ByteSpan req) { return Bytes(req.begin(), req.end()); });
  net.attach(kServiceId, echo);
  OnionClient client(kClient, net, kem);
  std::vector<std::uint32_t> circs;
  std::set<std::array<NodeId, kHops>> paths;
  for (int i = 0; i < 24; ++i) {
    circs.push_back(client.build_circuit(dir, rng));
    paths.insert(client.circuit(circs.back()).path);
  }
  EXPECT_EQ(paths.size(), 6u);  // every ordering of three relays
  for (std::size_t i = 0; i < circs.size(); ++i) {
    const Bytes msg{static_cast<std::uint8_t>(i), 1, 2};
    EXPECT_EQ(client.request(circs[i], kServiceId, msg), msg);
  }
}
