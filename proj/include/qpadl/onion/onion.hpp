#pragma once

#include <array>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <vector>

#include "qpadl/crypto/aead.hpp"
#include "qpadl/crypto/kem.hpp"
#include "qpadl/onion/cell.hpp"
#include "qpadl/onion/network.hpp"

namespace qpadl::onion {

inline constexpr unsigned kHops = 3;

enum RoleFlags : std::uint8_t { kEntry = 1, kMiddle = 2, kExit = 4, kAnyRole = 7 };

struct DirectoryEntry {
  NodeId id = 0;
  std::uint8_t roles = kAnyRole;
  Bytes kem_public_key;
};
using Directory = std::vector<DirectoryEntry>;

// Each layer is AEAD(flag || body) with flag 1 for "this hop is the
// endpoint" and 0 for "forward". A body addressed to hop j has this size.
inline constexpr std::size_t layer_body_size(unsigned hop) { return kCellPayload - 17 * (hop + 1); }
inline constexpr std::size_t sealed_size(unsigned hop) { return kCellPayload - 17 * hop; }
// Application bytes per data cell through a full circuit.
inline constexpr std::size_t kDataPerCell = layer_body_size(kHops - 1) - Fragment::kHeader;

enum class Direction : std::uint8_t { kForward = 0, kBackward = 1 };

crypto::AeadKey derive_hop_key(const Digest& shared_secret);
Digest key_confirmation(const crypto::AeadKey& key);
Bytes seal_layer(const crypto::AeadKey& key, unsigned hop, Direction dir, std::uint64_t counter, bool endpoint,
                 ByteSpan body);
// Returns (endpoint flag, body) or nothing on authentication failure.
std::optional<std::pair<bool, Bytes>> open_layer(const crypto::AeadKey& key, unsigned hop, Direction dir,
                                                 std::uint64_t counter, ByteSpan sealed);

// What a relay remembers about one circuit: neighbours and its key only.
struct RelayLogEntry {
  NodeId prev = 0;
  std::optional<NodeId> next;
};

class Relay final : public Node {
 public:
  Relay(NodeId id, std::uint8_t roles, std::shared_ptr<const crypto::Kem> kem, Rng& rng);

  DirectoryEntry directory_entry() const { return {id_, roles_, keys_.public_key}; }
  NodeId id() const { return id_; }
  void on_frame(SimNetwork& net, NodeId from, ByteSpan frame) override;

  const std::vector<RelayLogEntry>& log() const { return log_; }
  // Every frame this relay sent or received, for leak scans.
  const std::vector<Bytes>& trace() const { return trace_; }
  std::size_t open_circuits() const { return circuits_.size(); }

 private:
  struct Link {
    NodeId peer = 0;
    std::uint32_t circ = 0;
    auto operator<=>(const Link&) const = default;
  };
  struct Circuit {
    Link prev;
    std::optional<Link> next;
    unsigned hop = 0;
    crypto::AeadKey key{};
    std::uint64_t fwd = 0;
    std::uint64_t bwd = 0;
    std::size_t log_index = 0;
    Reassembler inbound;     // EXTEND / DATA from the client
    Reassembler downstream;  // CREATED from the next hop, APP replies
    std::uint32_t next_message = 1;
    bool extending = false;
  };

  std::uint32_t allocate_circ(NodeId peer);
  void send_cell(SimNetwork& net, NodeId to, const Cell& c);
  void handle_create(SimNetwork& net, NodeId from, const Cell& c);
  void handle_forward(SimNetwork& net, Circuit& circ, const Cell& c);
  void handle_backward(SimNetwork& net, Circuit& circ, const Cell& c);
  void handle_downstream(SimNetwork& net, Circuit& circ, const Cell& c);
  void originate_backward(SimNetwork& net, Circuit& circ, RelayCommand cmd, ByteSpan data);
  void teardown(SimNetwork& net, Link prev_key);

  NodeId id_;
  std::uint8_t roles_;
  std::shared_ptr<const crypto::Kem> kem_;
  crypto::KemKeyPair keys_;
  std::map<Link, Circuit> circuits_;  // keyed by the previous link
  std::map<Link, Link> by_next_;      // next link -> previous link
  std::map<Link, Reassembler> creating_;
  std::uint32_t next_circ_ = 1;
  std::vector<RelayLogEntry> log_;
  std::vector<Bytes> trace_;
};

// Destination reachable from exits; answers each request with handler(data).
class Service final : public Node {
 public:
  using Handler = std::function<Bytes(NodeId from, ByteSpan request)>;
  Service(NodeId id, Handler handler) : id_(id), handler_(std::move(handler)) {}

  NodeId id() const { return id_; }
  void on_frame(SimNetwork& net, NodeId from, ByteSpan frame) override;
  std::uint64_t requests() const { return requests_; }

 private:
  NodeId id_;
  Handler handler_;
  std::map<std::pair<NodeId, std::uint32_t>, Reassembler> streams_;
  std::uint32_t next_message_ = 1;
  std::uint64_t requests_ = 0;
};

enum class CircuitState { kBuilding, kOpen, kClosed };

struct CircuitInfo {
  std::uint32_t circ = 0;  // id on the client-entry link
  std::array<NodeId, kHops> path{};
  std::array<crypto::AeadKey, kHops> keys{};
  CircuitState state = CircuitState::kBuilding;
  SimTime build_time_us = 0;
};

class OnionClient final : public Node {
 public:
  OnionClient(NodeId id, SimNetwork& net, std::shared_ptr<const crypto::Kem> kem);

  // Picks entry, middle and exit from the directory (distinct, role capable)
  // and builds keys hop by hop. Throws kCircuit on failure.
  std::uint32_t build_circuit(const Directory& directory, Rng& rng);
  const CircuitInfo& circuit(std::uint32_t circ) const;

  void send(std::uint32_t circ, NodeId destination, ByteSpan message);
  // Next complete reply on the circuit, running the network as needed.
  std::optional<Bytes> receive(std::uint32_t circ);
  // send + receive; kCircuit if the circuit closes or no reply arrives.
  Bytes request(std::uint32_t circ, NodeId destination, ByteSpan message);
  void close(std::uint32_t circ);

  NodeId id() const { return id_; }
  void on_frame(SimNetwork& net, NodeId from, ByteSpan frame) override;

 private:
  struct State {
    CircuitInfo info;
    unsigned built = 0;
    std::array<std::uint64_t, kHops> fwd{};
    std::array<std::uint64_t, kHops> bwd{};
    std::optional<Digest> expected_confirm;
    std::array<Reassembler, kHops> replies;  // per originating hop
    std::deque<Bytes> inbox;
    std::uint32_t next_message = 1;
    std::array<Bytes, kHops> public_keys;
    Rng* rng = nullptr;
    SimTime started = 0;
  };

  void send_to_hop(State& s, unsigned target, RelayCommand cmd, NodeId destination, ByteSpan data);
  void extend(State& s);
  void fail_circuit(State& s);

  NodeId id_;
  SimNetwork& net_;
  std::shared_ptr<const crypto::Kem> kem_;
  std::map<std::uint32_t, State> circuits_;
  std::uint32_t next_circ_ = 1;
};

}  // namespace qpadl::onion
