#pragma once

#include <span>
#include <vector>

#include "qpadl/common/bytes.hpp"
#include "qpadl/db/record.hpp"

namespace qpadl::db {

// Delta coding of records sorted by row index. Each record is stored as
// zigzag varints of its field differences to the previous record:
//   cell_y, cell_x, channel, time_window, eirp, availability
// A non-empty stream starts with the record count as a varint; an empty input
// yields an empty stream.
Bytes compress_rows(std::span<const SpectrumRecord> records);
std::vector<SpectrumRecord> decompress_rows(ByteSpan stream);

// Per-field signed differences in stream order (six per record). Exposed for
// analysis of the coded stream.
std::vector<std::vector<std::int64_t>> row_deltas(std::span<const SpectrumRecord> records);

void put_varint(Bytes& out, std::uint64_t v);
std::uint64_t get_varint(ByteReader& r);
inline std::uint64_t zigzag(std::int64_t v) {
  return (static_cast<std::uint64_t>(v) << 1) ^ static_cast<std::uint64_t>(v >> 63);
}
inline std::int64_t unzigzag(std::uint64_t v) {
  return static_cast<std::int64_t>(v >> 1) ^ -static_cast<std::int64_t>(v & 1);
}

}  // namespace qpadl::db
