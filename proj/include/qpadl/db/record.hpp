#pragma once

#include <cstdint>
#include <memory>

#include "qpadl/common/bytes.hpp"

namespace qpadl::db {

struct GridCoordinate {
  std::uint32_t cell_x = 0;
  std::uint32_t cell_y = 0;
  bool operator==(const GridCoordinate&) const = default;
};

// Dimensions of the indexed space; r = n_rows * n_cols * n_ch * n_tv.
struct IndexParams {
  std::uint32_t n_cols = 1;
  std::uint32_t n_rows = 1;
  std::uint32_t n_ch = 1;
  std::uint32_t n_tv = 1;

  std::uint64_t row_count() const {
    return std::uint64_t{n_cols} * n_rows * n_ch * n_tv;
  }
};

struct RecordLimits {
  IndexParams dims;
  std::int32_t eirp_min_centi_dbm = -3000;  // -30 dBm
  std::int32_t eirp_max_centi_dbm = 3600;   // 36 dBm
};

struct SpectrumRecord {
  static constexpr std::size_t kSerializedBytes = 560;

  GridCoordinate coord;
  std::uint32_t channel = 0;
  std::uint32_t time_window = 0;
  std::int32_t eirp_centi_dbm = 0;  // fixed point, 0.01 dBm
  bool available = false;

  double eirp_dbm() const { return eirp_centi_dbm / 100.0; }

  // Fixed 560-byte form: little-endian fields, then zero fill.
  Bytes serialize() const;
  static SpectrumRecord deserialize(ByteSpan data);
  bool operator==(const SpectrumRecord&) const = default;
};

// Throws Errc::kDimension / Errc::kInput naming the offending field.
void validate(const SpectrumRecord& record, const RecordLimits& limits);

// Maps (cell, channel, window) to a row index. Swappable so a geohash-style
// codec can replace the flat layout.
class IndexEncoder {
 public:
  virtual ~IndexEncoder() = default;
  virtual std::uint64_t encode(const GridCoordinate& coord, std::uint32_t channel,
                               std::uint32_t time_window) const = 0;
  virtual void decode(std::uint64_t theta, GridCoordinate& coord, std::uint32_t& channel,
                      std::uint32_t& time_window) const = 0;
  virtual std::uint64_t row_count() const = 0;
};

// theta = ((cell_y * n_cols + cell_x) * n_ch + channel) * n_tv + time_window
class RowMajorIndex final : public IndexEncoder {
 public:
  explicit RowMajorIndex(IndexParams params);

  std::uint64_t encode(const GridCoordinate& coord, std::uint32_t channel,
                       std::uint32_t time_window) const override;
  void decode(std::uint64_t theta, GridCoordinate& coord, std::uint32_t& channel,
              std::uint32_t& time_window) const override;
  std::uint64_t row_count() const override { return params_.row_count(); }
  const IndexParams& params() const { return params_; }

 private:
  IndexParams params_;
};

std::uint64_t db_index(const GridCoordinate& coord, std::uint32_t channel, std::uint32_t time_window,
                       const IndexParams& params);

std::uint64_t record_index(const SpectrumRecord& record, const IndexParams& params);

// Placeholder record for rows without input data: decoded coordinates,
// unavailable, minimum power.
SpectrumRecord default_record(std::uint64_t theta, const IndexEncoder& index,
                              std::int32_t eirp_centi_dbm);

}  // namespace qpadl::db
