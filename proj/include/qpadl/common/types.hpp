#pragma once

#include <cstdint>
#include <string_view>

namespace qpadl {

enum class PirScheme : std::uint8_t { kNone = 0, kEns = 1, kFtr = 2, kOop = 3 };
enum class PowKind : std::uint8_t { kNone = 0, kHct = 1, kLbp = 2 };

std::string_view scheme_name(PirScheme s) noexcept;
std::string_view pow_name(PowKind k) noexcept;
PirScheme parse_scheme(std::string_view s);
PowKind parse_pow(std::string_view s);

}  // namespace qpadl
