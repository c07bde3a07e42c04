#include "qpadl/common/types.hpp"

#include <string>

#include "qpadl/common/error.hpp"

namespace qpadl {

std::string_view scheme_name(PirScheme s) noexcept {
  switch (s) {
    case PirScheme::kEns: return "ens";
    case PirScheme::kFtr: return "ftr";
    case PirScheme::kOop: return "oop";
    case PirScheme::kNone: break;
  }
  return "none";
}

std::string_view pow_name(PowKind k) noexcept {
  switch (k) {
    case PowKind::kHct: return "hct";
    case PowKind::kLbp: return "lbp";
    case PowKind::kNone: break;
  }
  return "none";
}

PirScheme parse_scheme(std::string_view s) {
  if (s == "ens") return PirScheme::kEns;
  if (s == "ftr") return PirScheme::kFtr;
  if (s == "oop") return PirScheme::kOop;
  fail(Errc::kUsage, "unknown PIR scheme '" + std::string(s) + "'");
}

PowKind parse_pow(std::string_view s) {
  if (s == "hct") return PowKind::kHct;
  if (s == "lbp") return PowKind::kLbp;
  if (s == "none") return PowKind::kNone;
  fail(Errc::kUsage, "unknown puzzle kind '" + std::string(s) + "'");
}

}  // namespace qpadl
