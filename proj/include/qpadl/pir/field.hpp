#pragma once

#include <cstdint>
#include <vector>

namespace qpadl::pir {

// Arithmetic in GF(p) for a prime p below 2^31.
class PrimeField {
 public:
  explicit PrimeField(std::uint32_t p);

  std::uint32_t modulus() const { return p_; }
  std::uint32_t add(std::uint32_t a, std::uint32_t b) const { return static_cast<std::uint32_t>((std::uint64_t{a} + b) % p_); }
  std::uint32_t sub(std::uint32_t a, std::uint32_t b) const { return static_cast<std::uint32_t>((std::uint64_t{a} + p_ - b) % p_); }
  std::uint32_t mul(std::uint32_t a, std::uint32_t b) const { return static_cast<std::uint32_t>(std::uint64_t{a} * b % p_); }
  std::uint32_t pow(std::uint32_t a, std::uint64_t e) const;
  std::uint32_t inv(std::uint32_t a) const;  // a must be nonzero

  // Horner evaluation; coefficients are lowest degree first.
  std::uint32_t eval(const std::vector<std::uint32_t>& poly, std::uint32_t x) const;

 private:
  std::uint32_t p_;
};

bool is_prime(std::uint32_t n);

}  // namespace qpadl::pir
