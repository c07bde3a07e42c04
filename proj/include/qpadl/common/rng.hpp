#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

#include "qpadl/common/bytes.hpp"

namespace qpadl {

// Randomness source. Protocol code takes an Rng& so tests can script the
// coins and simulations can replay from a seed.
class Rng {
 public:
  virtual ~Rng() = default;

  virtual void fill(std::span<std::uint8_t> out) = 0;
  virtual std::uint64_t next_u64();
  // Uniform in [0, bound). bound must be nonzero.
  virtual std::uint64_t uniform_below(std::uint64_t bound);

  Bytes bytes(std::size_t n) {
    Bytes out(n);
    fill(out);
    return out;
  }
  template <std::size_t N>
  std::array<std::uint8_t, N> array() {
    std::array<std::uint8_t, N> out{};
    fill(out);
    return out;
  }
};

// Deterministic generator for simulations and tests (not for key material
// outside the simulator).
class SeededRng final : public Rng {
 public:
  explicit SeededRng(std::uint64_t seed);
  SeededRng(std::uint64_t seed, std::string_view label);

  void fill(std::span<std::uint8_t> out) override;
  std::uint64_t next_u64() override { return engine_(); }

  // Independent child stream; same (seed, label) always yields the same child.
  SeededRng fork(std::string_view label) const;

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

// Operating-system entropy (OpenSSL RAND_bytes).
class SystemRng final : public Rng {
 public:
  void fill(std::span<std::uint8_t> out) override;
};

}  // namespace qpadl
