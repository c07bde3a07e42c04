#pragma once

#include <filesystem>

#include "qpadl/db/matrix.hpp"

namespace qpadl::db {

// On-disk layout, little-endian:
//   "QPDB" | u16 version | u32 r | u32 b | u8 scheme | u8 pow | payload |
//   SHA-256(payload)
inline constexpr std::uint16_t kDbFileVersion = 1;

Bytes db_encode(const DbMatrix& db);
DbMatrix db_decode(ByteSpan file);

void db_save(const DbMatrix& db, const std::filesystem::path& path);
DbMatrix db_load(const std::filesystem::path& path);

}  // namespace qpadl::db
