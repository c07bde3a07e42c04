#include <openssl/rand.h>

#include <cstddef>
#include <cstdint>
#include <span>

#include "random_source.hpp"

namespace qpadl::crypto::detail {
namespace {
thread_local Rng* t_source = nullptr;
}

ScopedRandomSource::ScopedRandomSource(Rng& rng) : previous_(t_source) { t_source = &rng; }
ScopedRandomSource::~ScopedRandomSource() { t_source = previous_; }

}  // namespace qpadl::crypto::detail

extern "C" int qpadl_pqclean_randombytes(std::uint8_t* buf, std::size_t n) {
  using qpadl::crypto::detail::t_source;
  if (t_source != nullptr) {
    t_source->fill(std::span<std::uint8_t>(buf, n));
    return 0;
  }
  return RAND_bytes(buf, static_cast<int>(n)) == 1 ? 0 : -1;
}
