#include "qpadl/onion/cell.hpp"

#include <algorithm>

#include "qpadl/common/error.hpp"

namespace qpadl::onion {

Bytes Cell::encode() const {
  ByteWriter w(kCellBytes);
  w.u32(circ);
  w.u8(static_cast<std::uint8_t>(command));
  w.raw(payload);
  return std::move(w).take();
}

Cell Cell::decode(ByteSpan frame) {
  if (frame.size() != kCellBytes) fail(Errc::kFormat, "cell must be 512 bytes");
  ByteReader r(frame);
  Cell c;
  c.circ = r.u32();
  const auto cmd = r.u8();
  if (cmd < 1 || cmd > 6) fail(Errc::kFormat, "unknown cell command");
  c.command = static_cast<CellCommand>(cmd);
  c.payload = r.array<kCellPayload>();
  return c;
}

Bytes Fragment::encode(std::size_t body_size) const {
  if (body_size < kHeader || data.size() > body_size - kHeader) fail(Errc::kCapacity, "fragment too large");
  ByteWriter w(body_size);
  w.u8(static_cast<std::uint8_t>(command));
  w.u32(message);
  w.u16(index);
  w.u16(count);
  w.u16(static_cast<std::uint16_t>(data.size()));
  w.u32(destination);
  w.raw(data);
  w.zeros(body_size - w.size());
  return std::move(w).take();
}

Fragment Fragment::decode(ByteSpan body) {
  ByteReader r(body);
  Fragment f;
  const auto cmd = r.u8();
  if (cmd < 1 || cmd > 3) fail(Errc::kProtocol, "unknown relay command");
  f.command = static_cast<RelayCommand>(cmd);
  f.message = r.u32();
  f.index = r.u16();
  f.count = r.u16();
  const auto len = r.u16();
  f.destination = r.u32();
  if (f.count == 0 || f.index >= f.count) fail(Errc::kProtocol, "bad fragment index");
  if (len > r.remaining()) fail(Errc::kProtocol, "fragment length exceeds body");
  const auto d = r.raw(len);
  f.data.assign(d.begin(), d.end());
  return f;
}

std::vector<Fragment> fragment(RelayCommand command, std::uint32_t message, NodeId destination, ByteSpan data,
                               std::size_t body_size) {
  const std::size_t cap = body_size - Fragment::kHeader;
  const std::size_t count = std::max<std::size_t>(1, (data.size() + cap - 1) / cap);
  if (count > 0xffff) fail(Errc::kCapacity, "message needs too many fragments");
  std::vector<Fragment> out;
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t begin = i * cap;
    const std::size_t end = std::min(data.size(), begin + cap);
    Fragment f;
    f.command = command;
    f.message = message;
    f.index = static_cast<std::uint16_t>(i);
    f.count = static_cast<std::uint16_t>(count);
    f.destination = destination;
    f.data.assign(data.begin() + static_cast<std::ptrdiff_t>(begin), data.begin() + static_cast<std::ptrdiff_t>(end));
    out.push_back(std::move(f));
  }
  return out;
}

std::optional<Reassembler::Message> Reassembler::add(const Fragment& f) {
  auto [it, fresh] = partial_.try_emplace(f.message, Partial{f.command, f.destination, {}, 0});
  auto& p = it->second;
  if (fresh) p.parts.resize(f.count);
  if (p.parts.size() != f.count || p.command != f.command || p.destination != f.destination) {
    partial_.erase(it);
    fail(Errc::kProtocol, "fragments of one message disagree");
  }
  if (p.parts[f.index]) {
    partial_.erase(it);
    fail(Errc::kProtocol, "duplicate fragment");
  }
  p.parts[f.index] = f.data;
  if (++p.have < p.parts.size()) return std::nullopt;
  Message m{p.command, p.destination, {}};
  for (auto& part : p.parts) m.data.insert(m.data.end(), part->begin(), part->end());
  partial_.erase(it);
  return m;
}

}  // namespace qpadl::onion
