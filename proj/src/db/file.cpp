#include "qpadl/db/file.hpp"

#include <fstream>
#include <iterator>

#include "qpadl/common/error.hpp"
#include "qpadl/crypto/hash.hpp"

namespace qpadl::db {
namespace {

constexpr std::size_t kHeaderBytes = 4 + 2 + 4 + 4 + 1 + 1;

}  // namespace

Bytes db_encode(const DbMatrix& db) {
  if (db.rows() > 0xffffffffu) fail(Errc::kCapacity, "row count exceeds file format");
  ByteWriter w(kHeaderBytes + db.payload_bytes().size() + 32);
  w.raw(as_bytes("QPDB"));
  w.u16(kDbFileVersion);
  w.u32(static_cast<std::uint32_t>(db.rows()));
  w.u32(db.block_bits());
  w.u8(static_cast<std::uint8_t>(db.scheme));
  w.u8(static_cast<std::uint8_t>(db.pow));
  w.raw(db.payload_bytes());
  w.raw(crypto::sha256(db.payload_bytes()));
  return std::move(w).take();
}

DbMatrix db_decode(ByteSpan file) {
  ByteReader r(file);
  auto magic = r.raw(4);
  if (!std::equal(magic.begin(), magic.end(), as_bytes("QPDB").begin())) fail(Errc::kFormat, "bad magic");
  if (r.u16() != kDbFileVersion) fail(Errc::kFormat, "unsupported version");
  const std::uint32_t rows = r.u32();
  const std::uint32_t bits = r.u32();
  const auto scheme = r.u8();
  const auto pow = r.u8();
  if (scheme > static_cast<std::uint8_t>(PirScheme::kOop)) fail(Errc::kFormat, "unknown scheme id");
  if (pow > static_cast<std::uint8_t>(PowKind::kLbp)) fail(Errc::kFormat, "unknown pow kind");
  if (rows == 0 || bits == 0 || bits % 64 != 0) fail(Errc::kFormat, "bad geometry");
  const std::uint64_t payload_len = std::uint64_t{rows} * (bits / 8);
  if (r.remaining() != payload_len + 32) fail(Errc::kFormat, "truncated or oversized payload");
  auto payload = r.raw(payload_len);
  auto footer = r.array<32>();
  if (crypto::sha256(payload) != footer) fail(Errc::kFormat, "payload digest mismatch");
  DbMatrix db(rows, bits);
  db.set_payload(payload);
  db.scheme = static_cast<PirScheme>(scheme);
  db.pow = static_cast<PowKind>(pow);
  return db;
}

void db_save(const DbMatrix& db, const std::filesystem::path& path) {
  const Bytes bytes = db_encode(db);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Errc::kInput, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(Errc::kInput, "write failed for " + path.string());
}

DbMatrix db_load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::kInput, "cannot open " + path.string());
  Bytes bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return db_decode(bytes);
}

}  // namespace qpadl::db
