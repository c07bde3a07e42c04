#pragma once

#include <cstdint>
#include <deque>
#include <stdexcept>

#include "qpadl/common/error.hpp"
#include "qpadl/common/rng.hpp"
#include "qpadl/db/matrix.hpp"

namespace qpadl::test {

// Replays a fixed byte script, then fails loudly if drained.
class ScriptedRng final : public Rng {
 public:
  explicit ScriptedRng(Bytes script) : script_(script.begin(), script.end()) {}
  void fill(std::span<std::uint8_t> out) override {
    for (auto& b : out) {
      if (script_.empty()) throw std::logic_error("scripted randomness exhausted");
      b = script_.front();
      script_.pop_front();
    }
  }
  std::uint64_t next_u64() override {
    std::uint8_t b[8];
    fill(b);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
    return v;
  }
  std::size_t left() const { return script_.size(); }

 private:
  std::deque<std::uint8_t> script_;
};

class ZeroRng final : public Rng {
 public:
  void fill(std::span<std::uint8_t> out) override { std::fill(out.begin(), out.end(), 0); }
  std::uint64_t next_u64() override { return 0; }
};

inline Bytes row_of(const db::DbMatrix& db, std::uint64_t i) {
  auto s = db.row_bytes(i);
  return {s.begin(), s.end()};
}

// Bit-by-bit XOR of the selected rows.
template <class Pred>
Bytes naive_fold(const db::DbMatrix& db, Pred selected) {
  Bytes acc(db.block_bytes(), 0);
  for (std::uint64_t j = 0; j < db.rows(); ++j) {
    if (!selected(j)) continue;
    auto row = db.row_bytes(j);
    for (std::size_t b = 0; b < acc.size(); ++b) {
      for (int bit = 0; bit < 8; ++bit) {
        if ((row[b] >> bit) & 1) acc[b] ^= static_cast<std::uint8_t>(1u << bit);
      }
    }
  }
  return acc;
}

template <class F>
Errc error_code(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  throw std::logic_error("expected a qpadl::Error");
}

}  // namespace qpadl::test
