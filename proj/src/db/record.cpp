#include "qpadl/db/record.hpp"

#include "qpadl/common/error.hpp"

namespace qpadl::db {

Bytes SpectrumRecord::serialize() const {
  ByteWriter w(kSerializedBytes);
  w.u32(coord.cell_x);
  w.u32(coord.cell_y);
  w.u32(channel);
  w.u32(time_window);
  w.i32(eirp_centi_dbm);
  w.u8(available ? 1 : 0);
  w.zeros(kSerializedBytes - w.size());
  return std::move(w).take();
}

SpectrumRecord SpectrumRecord::deserialize(ByteSpan data) {
  if (data.size() != kSerializedBytes) fail(Errc::kFormat, "spectrum record must be 560 bytes");
  ByteReader r(data);
  SpectrumRecord rec;
  rec.coord.cell_x = r.u32();
  rec.coord.cell_y = r.u32();
  rec.channel = r.u32();
  rec.time_window = r.u32();
  rec.eirp_centi_dbm = r.i32();
  const auto flag = r.u8();
  if (flag > 1) fail(Errc::kFormat, "spectrum record availability flag");
  rec.available = flag == 1;
  return rec;
}

void validate(const SpectrumRecord& record, const RecordLimits& limits) {
  const auto& d = limits.dims;
  if (record.coord.cell_x >= d.n_cols) fail(Errc::kDimension, "cell_x out of range");
  if (record.coord.cell_y >= d.n_rows) fail(Errc::kDimension, "cell_y out of range");
  if (record.channel >= d.n_ch) fail(Errc::kDimension, "channel out of range");
  if (record.time_window >= d.n_tv) fail(Errc::kDimension, "time_window out of range");
  if (record.eirp_centi_dbm < limits.eirp_min_centi_dbm || record.eirp_centi_dbm > limits.eirp_max_centi_dbm) {
    fail(Errc::kInput, "eirp_dbm outside configured limits");
  }
}

RowMajorIndex::RowMajorIndex(IndexParams params) : params_(params) {
  if (params.n_cols == 0 || params.n_rows == 0 || params.n_ch == 0 || params.n_tv == 0) {
    fail(Errc::kParameter, "index dimensions must be positive");
  }
}

std::uint64_t RowMajorIndex::encode(const GridCoordinate& coord, std::uint32_t channel,
                                    std::uint32_t time_window) const {
  return db_index(coord, channel, time_window, params_);
}

void RowMajorIndex::decode(std::uint64_t theta, GridCoordinate& coord, std::uint32_t& channel,
                           std::uint32_t& time_window) const {
  if (theta >= row_count()) fail(Errc::kDimension, "row index out of range");
  time_window = static_cast<std::uint32_t>(theta % params_.n_tv);
  theta /= params_.n_tv;
  channel = static_cast<std::uint32_t>(theta % params_.n_ch);
  theta /= params_.n_ch;
  coord.cell_x = static_cast<std::uint32_t>(theta % params_.n_cols);
  coord.cell_y = static_cast<std::uint32_t>(theta / params_.n_cols);
}

std::uint64_t db_index(const GridCoordinate& coord, std::uint32_t channel, std::uint32_t time_window,
                       const IndexParams& p) {
  if (coord.cell_x >= p.n_cols) fail(Errc::kDimension, "cell_x out of range");
  if (coord.cell_y >= p.n_rows) fail(Errc::kDimension, "cell_y out of range");
  if (channel >= p.n_ch) fail(Errc::kDimension, "channel out of range");
  if (time_window >= p.n_tv) fail(Errc::kDimension, "time_window out of range");
  return ((std::uint64_t{coord.cell_y} * p.n_cols + coord.cell_x) * p.n_ch + channel) * p.n_tv + time_window;
}

std::uint64_t record_index(const SpectrumRecord& record, const IndexParams& params) {
  return db_index(record.coord, record.channel, record.time_window, params);
}

SpectrumRecord default_record(std::uint64_t theta, const IndexEncoder& index, std::int32_t eirp_centi_dbm) {
  SpectrumRecord rec;
  index.decode(theta, rec.coord, rec.channel, rec.time_window);
  rec.eirp_centi_dbm = eirp_centi_dbm;
  rec.available = false;
  return rec;
}

}  // namespace qpadl::db
