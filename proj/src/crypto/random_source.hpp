#pragma once

#include "qpadl/common/rng.hpp"

namespace qpadl::crypto::detail {

// Routes the PQClean randombytes() calls made on this thread to `rng` for
// the lifetime of the guard.
class ScopedRandomSource {
 public:
  explicit ScopedRandomSource(Rng& rng);
  ~ScopedRandomSource();
  ScopedRandomSource(const ScopedRandomSource&) = delete;
  ScopedRandomSource& operator=(const ScopedRandomSource&) = delete;

 private:
  Rng* previous_;
};

}  // namespace qpadl::crypto::detail
