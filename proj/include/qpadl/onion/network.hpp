#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <queue>
#include <vector>

#include "qpadl/common/bytes.hpp"
#include "qpadl/common/rng.hpp"
#include "qpadl/onion/cell.hpp"

namespace qpadl::onion {

using SimTime = std::uint64_t;  // microseconds

class SimNetwork;

class Node {
 public:
  virtual ~Node() = default;
  virtual void on_frame(SimNetwork& net, NodeId from, ByteSpan frame) = 0;
};

struct NetworkConfig {
  SimTime link_delay_us = 25000;
  SimTime jitter_us = 0;  // uniform extra delay; links stay FIFO
  std::uint64_t seed = 0;
  bool record_frames = false;
};

// One delivered frame, kept when NetworkConfig::record_frames is set.
struct FrameRecord {
  std::uint64_t seq = 0;  // send order
  SimTime sent = 0;
  SimTime delivered = 0;
  NodeId from = 0;
  NodeId to = 0;
  std::size_t bytes = 0;
  Digest hash{};
};

// Single-threaded discrete-event network. Frames on one directed link are
// delivered in send order.
class SimNetwork {
 public:
  explicit SimNetwork(NetworkConfig config = {});

  void attach(NodeId id, Node& node);
  void send(NodeId from, NodeId to, Bytes frame);
  // Delivers frames until none are in flight, or until the predicate holds.
  void run();
  void run_until(const std::function<bool()>& done);

  SimTime now() const { return now_; }
  std::uint64_t frames_sent() const { return seq_; }
  std::uint64_t frames_delivered() const { return delivered_; }
  std::uint64_t bytes_delivered() const { return bytes_; }
  const std::vector<FrameRecord>& frames() const { return records_; }
  // Hash chain over every delivered (time, from, to, frame).
  const Digest& transcript_digest() const { return digest_; }

  // Test hook: may rewrite a frame just before delivery.
  using Tamper = std::function<void(NodeId from, NodeId to, Bytes& frame)>;
  void set_tamper(Tamper t) { tamper_ = std::move(t); }

  // Instrumentation shared by the onion nodes.
  std::uint64_t relay_layer_opens = 0;

 private:
  struct Event {
    SimTime at;
    SimTime sent;
    std::uint64_t seq;
    NodeId from;
    NodeId to;
    Bytes frame;
    bool operator>(const Event& o) const { return at != o.at ? at > o.at : seq > o.seq; }
  };
  bool step();

  NetworkConfig config_;
  SeededRng jitter_rng_;
  std::map<NodeId, Node*> nodes_;
  std::map<std::pair<NodeId, NodeId>, SimTime> link_clock_;
  std::priority_queue<Event, std::vector<Event>, std::greater<>> queue_;
  std::uint64_t seq_ = 0;
  std::uint64_t delivered_ = 0;
  std::uint64_t bytes_ = 0;
  std::vector<FrameRecord> records_;
  SimTime now_ = 0;
  Digest digest_{};
  Tamper tamper_;
};

}  // namespace qpadl::onion
