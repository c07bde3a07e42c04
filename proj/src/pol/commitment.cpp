#include "qpadl/pol/commitment.hpp"

#include "qpadl/crypto/hash.hpp"

namespace qpadl::pol {

Bytes encode_opening(const Opening& o) {
  ByteWriter w(36);
  w.u64(o.location.x);
  w.u64(o.location.y);
  w.raw(o.beacon_nonce);
  w.u64(o.window);
  w.raw(o.r);
  return std::move(w).take();
}

Opening decode_opening(ByteSpan data) {
  ByteReader r(data);
  Opening o;
  o.location.x = r.u64();
  o.location.y = r.u64();
  o.beacon_nonce = r.array<8>();
  o.window = r.u64();
  o.r = r.array<4>();
  r.expect_end();
  return o;
}

Digest commitment_digest(const Opening& opening) { return crypto::sha256(encode_opening(opening)); }

LocationCommitment commit_location(const Location& location, const Beacon& beacon, Rng& rng) {
  LocationCommitment c;
  c.opening.location = location;
  c.opening.beacon_nonce = beacon.nonce;
  c.opening.window = beacon.window;
  c.opening.r = rng.array<4>();
  c.digest = commitment_digest(c.opening);
  return c;
}

bool verify_opening(const Digest& digest, const Opening& opening) { return commitment_digest(opening) == digest; }

}  // namespace qpadl::pol
