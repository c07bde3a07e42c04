#include "qpadl/db/codec.hpp"

#include <array>
#include <limits>
#include <string>
#include <tuple>

#include "qpadl/common/error.hpp"

namespace qpadl::db {
namespace {

constexpr std::size_t kFields = 6;

std::array<std::int64_t, kFields> fields_of(const SpectrumRecord& r) {
  return {r.coord.cell_y, r.coord.cell_x, r.channel, r.time_window, r.eirp_centi_dbm, r.available ? 1 : 0};
}

auto order_key(const SpectrumRecord& r) {
  return std::tuple(r.coord.cell_y, r.coord.cell_x, r.channel, r.time_window);
}

void check_sorted(std::span<const SpectrumRecord> records) {
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (order_key(records[i]) < order_key(records[i - 1])) {
      fail(Errc::kOrdering, "records not sorted by row index at position " + std::to_string(i));
    }
  }
}

template <class T>
T narrow_field(std::int64_t v, const char* name) {
  if (v < static_cast<std::int64_t>(std::numeric_limits<T>::min()) ||
      v > static_cast<std::int64_t>(std::numeric_limits<T>::max())) {
    fail(Errc::kFormat, std::string("delta stream field out of range: ") + name);
  }
  return static_cast<T>(v);
}

}  // namespace

void put_varint(Bytes& out, std::uint64_t v) {
  while (v >= 0x80) {
    out.push_back(static_cast<std::uint8_t>(v | 0x80));
    v >>= 7;
  }
  out.push_back(static_cast<std::uint8_t>(v));
}

std::uint64_t get_varint(ByteReader& r) {
  std::uint64_t v = 0;
  for (int shift = 0; shift < 64; shift += 7) {
    const auto byte = r.u8();
    v |= std::uint64_t{byte & 0x7fu} << shift;
    if ((byte & 0x80) == 0) return v;
  }
  fail(Errc::kFormat, "varint longer than 64 bits");
}

std::vector<std::vector<std::int64_t>> row_deltas(std::span<const SpectrumRecord> records) {
  check_sorted(records);
  std::vector<std::vector<std::int64_t>> out(kFields);
  std::array<std::int64_t, kFields> prev{};
  for (const auto& rec : records) {
    auto cur = fields_of(rec);
    for (std::size_t f = 0; f < kFields; ++f) out[f].push_back(cur[f] - prev[f]);
    prev = cur;
  }
  return out;
}

Bytes compress_rows(std::span<const SpectrumRecord> records) {
  Bytes out;
  if (records.empty()) return out;
  check_sorted(records);
  put_varint(out, records.size());
  std::array<std::int64_t, kFields> prev{};
  for (const auto& rec : records) {
    auto cur = fields_of(rec);
    for (std::size_t f = 0; f < kFields; ++f) put_varint(out, zigzag(cur[f] - prev[f]));
    prev = cur;
  }
  return out;
}

std::vector<SpectrumRecord> decompress_rows(ByteSpan stream) {
  std::vector<SpectrumRecord> out;
  if (stream.empty()) return out;
  ByteReader r(stream);
  const std::uint64_t count = get_varint(r);
  // Every record needs at least one byte per field.
  if (count > stream.size() / kFields) fail(Errc::kFormat, "delta stream record count too large");
  out.reserve(count);
  std::array<std::int64_t, kFields> prev{};
  for (std::uint64_t i = 0; i < count; ++i) {
    std::array<std::int64_t, kFields> cur{};
    for (std::size_t f = 0; f < kFields; ++f) cur[f] = prev[f] + unzigzag(get_varint(r));
    SpectrumRecord rec;
    rec.coord.cell_y = narrow_field<std::uint32_t>(cur[0], "cell_y");
    rec.coord.cell_x = narrow_field<std::uint32_t>(cur[1], "cell_x");
    rec.channel = narrow_field<std::uint32_t>(cur[2], "channel");
    rec.time_window = narrow_field<std::uint32_t>(cur[3], "time_window");
    rec.eirp_centi_dbm = narrow_field<std::int32_t>(cur[4], "eirp");
    if (cur[5] != 0 && cur[5] != 1) fail(Errc::kFormat, "delta stream availability flag");
    rec.available = cur[5] == 1;
    out.push_back(rec);
    prev = cur;
  }
  r.expect_end();
  check_sorted(out);
  return out;
}

}  // namespace qpadl::db
