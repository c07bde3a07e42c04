#include "qpadl/common/error.hpp"

namespace qpadl {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::kDimension: return "dimension error";
    case Errc::kCapacity: return "capacity error";
    case Errc::kOrdering: return "ordering error";
    case Errc::kFormat: return "format error";
    case Errc::kParameter: return "parameter error";
    case Errc::kGeometry: return "geometry error";
    case Errc::kIncomplete: return "incompleteness error";
    case Errc::kRobustness: return "robustness error";
    case Errc::kBackpressure: return "backpressure error";
    case Errc::kReplay: return "replay error";
    case Errc::kMembership: return "membership error";
    case Errc::kInput: return "input error";
    case Errc::kSolverExhausted: return "solver-exhausted error";
    case Errc::kCircuit: return "circuit build error";
    case Errc::kProtocol: return "protocol error";
    case Errc::kUsage: return "usage error";
  }
  return "error";
}

}  // namespace qpadl
