#include "qpadl/onion/network.hpp"

#include "qpadl/common/error.hpp"
#include "qpadl/crypto/hash.hpp"

namespace qpadl::onion {

SimNetwork::SimNetwork(NetworkConfig config) : config_(config), jitter_rng_(config.seed, "network-jitter") {}

void SimNetwork::attach(NodeId id, Node& node) {
  if (!nodes_.emplace(id, &node).second) fail(Errc::kParameter, "node id already attached");
}

void SimNetwork::send(NodeId from, NodeId to, Bytes frame) {
  SimTime at = now_ + config_.link_delay_us;
  if (config_.jitter_us > 0) at += jitter_rng_.uniform_below(config_.jitter_us + 1);
  auto& clock = link_clock_[{from, to}];
  at = std::max(at, clock);
  clock = at;
  queue_.push(Event{at, now_, seq_++, from, to, std::move(frame)});
}

bool SimNetwork::step() {
  if (queue_.empty()) return false;
  Event e = queue_.top();
  queue_.pop();
  now_ = e.at;
  if (tamper_) tamper_(e.from, e.to, e.frame);
  crypto::Sha256 h;
  h.update(digest_);
  h.update_u64(e.at);
  h.update_u32(e.from);
  h.update_u32(e.to);
  h.update(e.frame);
  digest_ = h.finish();
  ++delivered_;
  bytes_ += e.frame.size();
  if (config_.record_frames) {
    records_.push_back({e.seq, e.sent, e.at, e.from, e.to, e.frame.size(), crypto::sha256(e.frame)});
  }
  auto it = nodes_.find(e.to);
  if (it != nodes_.end()) it->second->on_frame(*this, e.from, e.frame);
  return true;
}

void SimNetwork::run() {
  while (step()) {
  }
}

void SimNetwork::run_until(const std::function<bool()>& done) {
  while (!done() && step()) {
  }
}

}  // namespace qpadl::onion
