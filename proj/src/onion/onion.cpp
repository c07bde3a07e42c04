#include "qpadl/onion/onion.hpp"

#include <algorithm>

#include "qpadl/common/error.hpp"
#include "qpadl/crypto/hash.hpp"

namespace qpadl::onion {
namespace {

Cell make_cell(std::uint32_t circ, CellCommand cmd, ByteSpan body) {
  if (body.size() > kCellPayload) fail(Errc::kCapacity, "cell body too large");
  Cell c;
  c.circ = circ;
  c.command = cmd;
  std::copy(body.begin(), body.end(), c.payload.begin());
  return c;
}

crypto::AeadNonce layer_nonce(unsigned hop, Direction dir, std::uint64_t counter) {
  crypto::AeadNonce n{};
  n[0] = static_cast<std::uint8_t>(hop);
  n[1] = static_cast<std::uint8_t>(dir);
  for (int i = 0; i < 8; ++i) n[4 + i] = static_cast<std::uint8_t>(counter >> (8 * i));
  return n;
}

std::array<std::uint8_t, 3> layer_aad(unsigned hop, Direction dir) {
  return {'o', static_cast<std::uint8_t>(hop), static_cast<std::uint8_t>(dir)};
}

}  // namespace

crypto::AeadKey derive_hop_key(const Digest& shared_secret) {
  return crypto::tagged_hash("onion-hop-key", {shared_secret});
}

Digest key_confirmation(const crypto::AeadKey& key) { return crypto::tagged_hash("onion-key-confirm", {key}); }

Bytes seal_layer(const crypto::AeadKey& key, unsigned hop, Direction dir, std::uint64_t counter, bool endpoint,
                 ByteSpan body) {
  Bytes plain;
  plain.reserve(body.size() + 1);
  plain.push_back(endpoint ? 1 : 0);
  plain.insert(plain.end(), body.begin(), body.end());
  return crypto::aead_seal(key, layer_nonce(hop, dir, counter), layer_aad(hop, dir), plain);
}

std::optional<std::pair<bool, Bytes>> open_layer(const crypto::AeadKey& key, unsigned hop, Direction dir,
                                                 std::uint64_t counter, ByteSpan sealed) {
  auto plain = crypto::aead_open(key, layer_nonce(hop, dir, counter), layer_aad(hop, dir), sealed);
  if (!plain || plain->empty() || (*plain)[0] > 1) return std::nullopt;
  const bool endpoint = (*plain)[0] == 1;
  return std::make_pair(endpoint, Bytes(plain->begin() + 1, plain->end()));
}

// ---- relay ----

Relay::Relay(NodeId id, std::uint8_t roles, std::shared_ptr<const crypto::Kem> kem, Rng& rng)
    : id_(id), roles_(roles), kem_(std::move(kem)), keys_(kem_->keygen(rng)) {}

// Both ends of a relay link allocate ids on it, so the lower node id takes
// the low half of the space and the higher one sets the top bit.
std::uint32_t Relay::allocate_circ(NodeId peer) {
  const std::uint32_t id = next_circ_++ & 0x7fffffffu;
  return id_ > peer ? id | 0x80000000u : id;
}

void Relay::send_cell(SimNetwork& net, NodeId to, const Cell& c) {
  auto frame = c.encode();
  trace_.push_back(frame);
  net.send(id_, to, std::move(frame));
}

void Relay::on_frame(SimNetwork& net, NodeId from, ByteSpan frame) {
  trace_.emplace_back(frame.begin(), frame.end());
  Cell c;
  try {
    c = Cell::decode(frame);
  } catch (const Error&) {
    return;
  }
  const Link link{from, c.circ};
  if (c.command == CellCommand::kCreate) {
    handle_create(net, from, c);
    return;
  }
  if (auto it = circuits_.find(link); it != circuits_.end()) {
    if (c.command == CellCommand::kRelayForward) {
      handle_forward(net, it->second, c);
    } else if (c.command == CellCommand::kDestroy) {
      if (it->second.next) {
        send_cell(net, it->second.next->peer, make_cell(it->second.next->circ, CellCommand::kDestroy, {}));
        by_next_.erase(*it->second.next);
      }
      circuits_.erase(it);
    }
    return;
  }
  auto back = by_next_.find(link);
  if (back == by_next_.end()) return;
  auto& circ = circuits_.at(back->second);
  switch (c.command) {
    case CellCommand::kRelayBackward:
      handle_backward(net, circ, c);
      break;
    case CellCommand::kCreated:
    case CellCommand::kApp:
      handle_downstream(net, circ, c);
      break;
    case CellCommand::kDestroy: {
      const Link prev = circ.prev;
      send_cell(net, prev.peer, make_cell(prev.circ, CellCommand::kDestroy, {}));
      by_next_.erase(back);
      circuits_.erase(prev);
      break;
    }
    default:
      break;
  }
}

void Relay::handle_create(SimNetwork& net, NodeId from, const Cell& c) {
  const Link link{from, c.circ};
  if (circuits_.count(link)) return;
  std::optional<Reassembler::Message> msg;
  try {
    msg = creating_[link].add(Fragment::decode(c.payload));
  } catch (const Error&) {
    creating_.erase(link);
    send_cell(net, from, make_cell(c.circ, CellCommand::kDestroy, {}));
    return;
  }
  if (!msg) return;
  creating_.erase(link);
  const unsigned hop = msg->data.empty() ? kHops : msg->data[0];
  const std::uint8_t needed = hop == 0 ? kEntry : hop == 1 ? kMiddle : kExit;
  if (hop >= kHops || (roles_ & needed) == 0) {
    send_cell(net, from, make_cell(c.circ, CellCommand::kDestroy, {}));
    return;
  }
  const Digest ss = kem_->decapsulate(keys_.secret_key, ByteSpan(msg->data).subspan(1));
  Circuit circ;
  circ.prev = link;
  circ.hop = hop;
  circ.key = derive_hop_key(ss);
  circ.log_index = log_.size();
  log_.push_back({from, std::nullopt});
  const Digest confirm = key_confirmation(circ.key);
  circuits_.emplace(link, std::move(circ));
  for (const auto& f : fragment(RelayCommand::kExtended, 1, 0, confirm, kCellPayload)) {
    send_cell(net, from, make_cell(c.circ, CellCommand::kCreated, f.encode(kCellPayload)));
  }
}

void Relay::teardown(SimNetwork& net, Link prev_key) {
  auto it = circuits_.find(prev_key);
  if (it == circuits_.end()) return;
  send_cell(net, prev_key.peer, make_cell(prev_key.circ, CellCommand::kDestroy, {}));
  if (it->second.next) {
    send_cell(net, it->second.next->peer, make_cell(it->second.next->circ, CellCommand::kDestroy, {}));
    by_next_.erase(*it->second.next);
  }
  circuits_.erase(it);
}

void Relay::handle_forward(SimNetwork& net, Circuit& circ, const Cell& c) {
  ++net.relay_layer_opens;
  const auto opened =
      open_layer(circ.key, circ.hop, Direction::kForward, circ.fwd++, ByteSpan(c.payload).first(sealed_size(circ.hop)));
  if (!opened) {
    teardown(net, circ.prev);
    return;
  }
  const auto& [endpoint, body] = *opened;
  if (!endpoint) {
    if (!circ.next || circ.hop + 1 >= kHops) {
      teardown(net, circ.prev);
      return;
    }
    send_cell(net, circ.next->peer, make_cell(circ.next->circ, CellCommand::kRelayForward, body));
    return;
  }
  std::optional<Reassembler::Message> msg;
  try {
    msg = circ.inbound.add(Fragment::decode(body));
  } catch (const Error&) {
    teardown(net, circ.prev);
    return;
  }
  if (!msg) return;
  if (msg->command == RelayCommand::kExtend) {
    if (circ.next || circ.hop + 1 >= kHops || msg->data.empty() || msg->data[0] != circ.hop + 1) {
      teardown(net, circ.prev);
      return;
    }
    const Link next{msg->destination, allocate_circ(msg->destination)};
    circ.next = next;
    by_next_[next] = circ.prev;
    log_[circ.log_index].next = next.peer;
    for (const auto& f : fragment(RelayCommand::kExtend, 1, next.peer, msg->data, kCellPayload)) {
      send_cell(net, next.peer, make_cell(next.circ, CellCommand::kCreate, f.encode(kCellPayload)));
    }
  } else if (msg->command == RelayCommand::kData) {
    if (circ.hop != kHops - 1 || (circ.next && circ.next->peer != msg->destination)) {
      teardown(net, circ.prev);
      return;
    }
    if (!circ.next) {
      const Link next{msg->destination, allocate_circ(msg->destination)};
      circ.next = next;
      by_next_[next] = circ.prev;
      log_[circ.log_index].next = next.peer;
    }
    for (const auto& f : fragment(RelayCommand::kData, circ.next_message++, msg->destination, msg->data, kCellPayload)) {
      send_cell(net, circ.next->peer, make_cell(circ.next->circ, CellCommand::kApp, f.encode(kCellPayload)));
    }
  } else {
    teardown(net, circ.prev);
  }
}

void Relay::handle_backward(SimNetwork& net, Circuit& circ, const Cell& c) {
  if (circ.hop + 1 >= kHops) {
    teardown(net, circ.prev);
    return;
  }
  const auto inner = ByteSpan(c.payload).first(sealed_size(circ.hop + 1));
  const auto sealed = seal_layer(circ.key, circ.hop, Direction::kBackward, circ.bwd++, false, inner);
  send_cell(net, circ.prev.peer, make_cell(circ.prev.circ, CellCommand::kRelayBackward, sealed));
}

void Relay::handle_downstream(SimNetwork& net, Circuit& circ, const Cell& c) {
  std::optional<Reassembler::Message> msg;
  try {
    msg = circ.downstream.add(Fragment::decode(c.payload));
  } catch (const Error&) {
    teardown(net, circ.prev);
    return;
  }
  if (!msg) return;
  if (c.command == CellCommand::kCreated && msg->command == RelayCommand::kExtended) {
    originate_backward(net, circ, RelayCommand::kExtended, msg->data);
  } else if (c.command == CellCommand::kApp && msg->command == RelayCommand::kData) {
    originate_backward(net, circ, RelayCommand::kData, msg->data);
  } else {
    teardown(net, circ.prev);
  }
}

void Relay::originate_backward(SimNetwork& net, Circuit& circ, RelayCommand cmd, ByteSpan data) {
  const std::size_t body = layer_body_size(circ.hop);
  for (const auto& f : fragment(cmd, circ.next_message++, 0, data, body)) {
    const auto sealed = seal_layer(circ.key, circ.hop, Direction::kBackward, circ.bwd++, true, f.encode(body));
    send_cell(net, circ.prev.peer, make_cell(circ.prev.circ, CellCommand::kRelayBackward, sealed));
  }
}

// ---- service ----

void Service::on_frame(SimNetwork& net, NodeId from, ByteSpan frame) {
  Cell c;
  try {
    c = Cell::decode(frame);
  } catch (const Error&) {
    return;
  }
  const auto key = std::make_pair(from, c.circ);
  if (c.command == CellCommand::kDestroy) {
    streams_.erase(key);
    return;
  }
  if (c.command != CellCommand::kApp) return;
  std::optional<Reassembler::Message> msg;
  try {
    msg = streams_[key].add(Fragment::decode(c.payload));
  } catch (const Error&) {
    streams_.erase(key);
    return;
  }
  if (!msg) return;
  ++requests_;
  const Bytes reply = handler_(from, msg->data);
  for (const auto& f : fragment(RelayCommand::kData, next_message_++, from, reply, kCellPayload)) {
    net.send(id_, from, make_cell(c.circ, CellCommand::kApp, f.encode(kCellPayload)).encode());
  }
}

// ---- client ----

OnionClient::OnionClient(NodeId id, SimNetwork& net, std::shared_ptr<const crypto::Kem> kem)
    : id_(id), net_(net), kem_(std::move(kem)) {
  net_.attach(id_, *this);
}

std::uint32_t OnionClient::build_circuit(const Directory& directory, Rng& rng) {
  std::array<const DirectoryEntry*, kHops> path{};
  const std::uint8_t roles[kHops] = {kEntry, kMiddle, kExit};
  for (unsigned h = 0; h < kHops; ++h) {
    std::vector<const DirectoryEntry*> candidates;
    for (const auto& e : directory) {
      if ((e.roles & roles[h]) == 0) continue;
      if (std::any_of(path.begin(), path.begin() + h, [&](const DirectoryEntry* p) { return p->id == e.id; })) continue;
      candidates.push_back(&e);
    }
    if (candidates.empty()) fail(Errc::kCircuit, "directory has no relay for hop " + std::to_string(h));
    path[h] = candidates.size() == 1 ? candidates[0] : candidates[rng.uniform_below(candidates.size())];
  }
  const std::uint32_t circ = next_circ_++;
  State& s = circuits_[circ];
  s.info.circ = circ;
  s.rng = &rng;
  s.started = net_.now();
  for (unsigned h = 0; h < kHops; ++h) {
    s.info.path[h] = path[h]->id;
    s.public_keys[h] = path[h]->kem_public_key;
  }
  const auto enc = kem_->encapsulate(s.public_keys[0], rng);
  s.info.keys[0] = derive_hop_key(enc.shared_secret);
  s.expected_confirm = key_confirmation(s.info.keys[0]);
  Bytes data{0};
  data.insert(data.end(), enc.ciphertext.begin(), enc.ciphertext.end());
  for (const auto& f : fragment(RelayCommand::kExtend, 1, s.info.path[0], data, kCellPayload)) {
    net_.send(id_, s.info.path[0], make_cell(circ, CellCommand::kCreate, f.encode(kCellPayload)).encode());
  }
  net_.run_until([&] { return s.info.state != CircuitState::kBuilding; });
  s.rng = nullptr;
  if (s.info.state != CircuitState::kOpen) {
    s.info.state = CircuitState::kClosed;
    fail(Errc::kCircuit, "circuit build failed after " + std::to_string(s.built) + " hops");
  }
  s.info.build_time_us = net_.now() - s.started;
  return circ;
}

const CircuitInfo& OnionClient::circuit(std::uint32_t circ) const {
  auto it = circuits_.find(circ);
  if (it == circuits_.end()) fail(Errc::kCircuit, "unknown circuit");
  return it->second.info;
}

void OnionClient::send_to_hop(State& s, unsigned target, RelayCommand cmd, NodeId destination, ByteSpan data) {
  const std::size_t body = layer_body_size(target);
  for (const auto& f : fragment(cmd, s.next_message++, destination, data, body)) {
    Bytes blob = seal_layer(s.info.keys[target], target, Direction::kForward, s.fwd[target]++, true, f.encode(body));
    for (unsigned h = target; h-- > 0;) {
      blob = seal_layer(s.info.keys[h], h, Direction::kForward, s.fwd[h]++, false, blob);
    }
    net_.send(id_, s.info.path[0], make_cell(s.info.circ, CellCommand::kRelayForward, blob).encode());
  }
}

void OnionClient::extend(State& s) {
  const unsigned n = s.built;
  const auto enc = kem_->encapsulate(s.public_keys[n], *s.rng);
  s.info.keys[n] = derive_hop_key(enc.shared_secret);
  s.expected_confirm = key_confirmation(s.info.keys[n]);
  Bytes data{static_cast<std::uint8_t>(n)};
  data.insert(data.end(), enc.ciphertext.begin(), enc.ciphertext.end());
  send_to_hop(s, n - 1, RelayCommand::kExtend, s.info.path[n], data);
}

void OnionClient::fail_circuit(State& s) {
  if (s.info.state != CircuitState::kClosed) {
    net_.send(id_, s.info.path[0], make_cell(s.info.circ, CellCommand::kDestroy, {}).encode());
  }
  s.info.state = CircuitState::kClosed;
}

void OnionClient::on_frame(SimNetwork&, NodeId from, ByteSpan frame) {
  Cell c;
  try {
    c = Cell::decode(frame);
  } catch (const Error&) {
    return;
  }
  auto it = circuits_.find(c.circ);
  if (it == circuits_.end() || from != it->second.info.path[0]) return;
  State& s = it->second;
  if (s.info.state == CircuitState::kClosed) return;
  if (c.command == CellCommand::kDestroy) {
    s.info.state = CircuitState::kClosed;
    return;
  }
  std::optional<Fragment> frag;
  unsigned origin = 0;
  try {
    if (c.command == CellCommand::kCreated && s.built == 0) {
      frag = Fragment::decode(c.payload);
    } else if (c.command == CellCommand::kRelayBackward && s.built > 0) {
      Bytes blob(c.payload.begin(), c.payload.end());
      for (unsigned h = 0; h < s.built && !frag; ++h) {
        auto opened = open_layer(s.info.keys[h], h, Direction::kBackward, s.bwd[h]++,
                                 ByteSpan(blob).first(sealed_size(h)));
        if (!opened) break;
        if (opened->first) {
          frag = Fragment::decode(opened->second);
          origin = h;
        } else {
          blob = std::move(opened->second);
        }
      }
    }
    if (!frag) {
      fail_circuit(s);
      return;
    }
    const auto msg = s.replies[origin].add(*frag);
    if (!msg) return;
    if (msg->command == RelayCommand::kExtended) {
      if (s.info.state != CircuitState::kBuilding || !s.expected_confirm ||
          msg->data != Bytes(s.expected_confirm->begin(), s.expected_confirm->end())) {
        fail_circuit(s);
        return;
      }
      s.expected_confirm.reset();
      if (++s.built == kHops) {
        s.info.state = CircuitState::kOpen;
      } else {
        extend(s);
      }
    } else if (msg->command == RelayCommand::kData && s.info.state == CircuitState::kOpen) {
      s.inbox.push_back(msg->data);
    } else {
      fail_circuit(s);
    }
  } catch (const Error&) {
    fail_circuit(s);
  }
}

void OnionClient::send(std::uint32_t circ, NodeId destination, ByteSpan message) {
  auto it = circuits_.find(circ);
  if (it == circuits_.end() || it->second.info.state != CircuitState::kOpen) fail(Errc::kCircuit, "circuit not open");
  send_to_hop(it->second, kHops - 1, RelayCommand::kData, destination, message);
}

std::optional<Bytes> OnionClient::receive(std::uint32_t circ) {
  auto it = circuits_.find(circ);
  if (it == circuits_.end()) fail(Errc::kCircuit, "unknown circuit");
  State& s = it->second;
  net_.run_until([&] { return !s.inbox.empty() || s.info.state == CircuitState::kClosed; });
  if (s.inbox.empty()) return std::nullopt;
  Bytes out = std::move(s.inbox.front());
  s.inbox.pop_front();
  return out;
}

Bytes OnionClient::request(std::uint32_t circ, NodeId destination, ByteSpan message) {
  send(circ, destination, message);
  auto reply = receive(circ);
  if (!reply) fail(Errc::kCircuit, "circuit closed before a reply arrived");
  return std::move(*reply);
}

void OnionClient::close(std::uint32_t circ) {
  auto it = circuits_.find(circ);
  if (it == circuits_.end()) return;
  fail_circuit(it->second);
}

}  // namespace qpadl::onion
