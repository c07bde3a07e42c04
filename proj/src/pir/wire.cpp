#include "qpadl/pir/wire.hpp"

#include "qpadl/common/error.hpp"

namespace qpadl::pir {

Bytes PirMessage::encode() const {
  ByteWriter w(6 + payload.size());
  w.u8(static_cast<std::uint8_t>(scheme));
  w.u8(server);
  w.blob(payload);
  return std::move(w).take();
}

PirMessage PirMessage::decode(ByteSpan data) {
  ByteReader r(data);
  PirMessage m;
  const auto scheme = r.u8();
  if (scheme < 1 || scheme > 3) fail(Errc::kFormat, "unknown PIR scheme id");
  m.scheme = static_cast<PirScheme>(scheme);
  m.server = r.u8();
  m.payload = r.blob();
  r.expect_end();
  return m;
}

Bytes encode_field_elements(std::span<const std::uint32_t> values) {
  ByteWriter w(values.size() * 4);
  for (auto v : values) w.u32(v);
  return std::move(w).take();
}

std::vector<std::uint32_t> decode_field_elements(ByteSpan data) {
  if (data.size() % 4 != 0) fail(Errc::kFormat, "field element payload not a multiple of 4 bytes");
  ByteReader r(data);
  std::vector<std::uint32_t> out(data.size() / 4);
  for (auto& v : out) v = r.u32();
  return out;
}

Bytes encode_bits(const BitVector& v) { return v.to_bytes(); }

BitVector decode_bits(ByteSpan data, std::size_t bits) {
  try {
    return BitVector::from_bytes(data, bits);
  } catch (const Error& e) {
    fail(Errc::kFormat, e.what());
  }
}

Bytes encode_oop_query(std::uint64_t session, const BitVector& q) {
  ByteWriter w;
  w.u64(session);
  w.raw(q.to_bytes());
  return std::move(w).take();
}

std::pair<std::uint64_t, BitVector> decode_oop_query(ByteSpan data, std::size_t bits) {
  ByteReader r(data);
  const auto session = r.u64();
  return {session, decode_bits(data.subspan(8), bits)};
}

Bytes encode_oop_response(std::uint64_t session, ByteSpan block) {
  ByteWriter w;
  w.u64(session);
  w.raw(block);
  return std::move(w).take();
}

std::pair<std::uint64_t, Bytes> decode_oop_response(ByteSpan data) {
  ByteReader r(data);
  const auto session = r.u64();
  return {session, Bytes(data.begin() + 8, data.end())};
}

}  // namespace qpadl::pir
