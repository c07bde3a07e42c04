#include "qpadl/common/bytes.hpp"

#include <bit>
#include <cstring>

#include "qpadl/common/error.hpp"

namespace qpadl {

std::string to_hex(ByteSpan data) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(data.size() * 2);
  for (auto b : data) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0xf]);
  }
  return out;
}

void ByteWriter::f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
void ByteWriter::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

std::uint8_t ByteReader::u8() {
  if (remaining() < 1) fail(Errc::kFormat, "truncated input");
  return data_[pos_++];
}

float ByteReader::f32() { return std::bit_cast<float>(u32()); }
double ByteReader::f64() { return std::bit_cast<double>(u64()); }

ByteSpan ByteReader::raw(std::size_t n) {
  if (remaining() < n) fail(Errc::kFormat, "truncated input");
  auto out = data_.subspan(pos_, n);
  pos_ += n;
  return out;
}

void ByteReader::expect_end() const {
  if (remaining() != 0) fail(Errc::kFormat, "trailing bytes after message");
}

std::uint64_t ByteReader::get_le(int n) {
  if (remaining() < static_cast<std::size_t>(n)) fail(Errc::kFormat, "truncated input");
  std::uint64_t v = 0;
  for (int i = 0; i < n; ++i) v |= std::uint64_t{data_[pos_ + i]} << (8 * i);
  pos_ += n;
  return v;
}

}  // namespace qpadl
