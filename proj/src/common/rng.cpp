#include "qpadl/common/rng.hpp"

#include <openssl/rand.h>

#include <cstring>
#include <functional>

#include "qpadl/common/error.hpp"

namespace qpadl {

std::uint64_t Rng::next_u64() {
  std::array<std::uint8_t, 8> buf{};
  fill(buf);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t{buf[i]} << (8 * i);
  return v;
}

std::uint64_t Rng::uniform_below(std::uint64_t bound) {
  if (bound == 0) fail(Errc::kParameter, "uniform_below(0)");
  // Rejection sampling keeps the draw exactly uniform.
  const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound + 1) % bound;
  for (;;) {
    std::uint64_t v = next_u64();
    if (v <= limit) return v % bound;
  }
}

namespace {

std::uint64_t mix_label(std::uint64_t seed, std::string_view label) {
  // FNV-1a over the label, folded with the seed through splitmix64.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : label) {
    h ^= static_cast<std::uint8_t>(c);
    h *= 0x100000001b3ULL;
  }
  std::uint64_t z = seed ^ h;
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

SeededRng::SeededRng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

SeededRng::SeededRng(std::uint64_t seed, std::string_view label)
    : seed_(mix_label(seed, label)), engine_(seed_) {}

void SeededRng::fill(std::span<std::uint8_t> out) {
  std::size_t i = 0;
  while (i + 8 <= out.size()) {
    std::uint64_t v = engine_();
    std::memcpy(out.data() + i, &v, 8);
    i += 8;
  }
  if (i < out.size()) {
    std::uint64_t v = engine_();
    std::memcpy(out.data() + i, &v, out.size() - i);
  }
}

SeededRng SeededRng::fork(std::string_view label) const { return SeededRng(seed_, label); }

void SystemRng::fill(std::span<std::uint8_t> out) {
  if (out.empty()) return;
  if (RAND_bytes(out.data(), static_cast<int>(out.size())) != 1) {
    fail(Errc::kInput, "system randomness unavailable");
  }
}

}  // namespace qpadl
