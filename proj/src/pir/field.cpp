#include "qpadl/pir/field.hpp"

#include "qpadl/common/error.hpp"

namespace qpadl::pir {

bool is_prime(std::uint32_t n) {
  if (n < 2) return false;
  for (std::uint64_t d = 2; d * d <= n; ++d) {
    if (n % d == 0) return false;
  }
  return true;
}

PrimeField::PrimeField(std::uint32_t p) : p_(p) {
  if (p >= (1u << 31) || !is_prime(p)) fail(Errc::kParameter, "field modulus must be a prime below 2^31");
}

std::uint32_t PrimeField::pow(std::uint32_t a, std::uint64_t e) const {
  std::uint64_t result = 1 % p_;
  std::uint64_t base = a % p_;
  for (; e != 0; e >>= 1) {
    if (e & 1) result = result * base % p_;
    base = base * base % p_;
  }
  return static_cast<std::uint32_t>(result);
}

std::uint32_t PrimeField::inv(std::uint32_t a) const {
  if (a % p_ == 0) fail(Errc::kParameter, "inverse of zero");
  return pow(a, p_ - 2);
}

std::uint32_t PrimeField::eval(const std::vector<std::uint32_t>& poly, std::uint32_t x) const {
  std::uint64_t acc = 0;
  for (auto it = poly.rbegin(); it != poly.rend(); ++it) acc = (acc * x + *it) % p_;
  return static_cast<std::uint32_t>(acc);
}

}  // namespace qpadl::pir
