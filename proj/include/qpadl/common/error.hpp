#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace qpadl {

// Error categories surfaced by the library. Every thrown qpadl::Error carries
// exactly one of these so callers (and the CLI exit-code mapping) can branch
// on the category without parsing messages.
enum class Errc {
  kDimension,       // index component outside the configured grid
  kCapacity,        // serialized content does not fit in a block
  kOrdering,        // input required to be sorted was not
  kFormat,          // malformed on-disk or wire bytes
  kParameter,       // invalid scheme parameter (l, t, n, ...)
  kGeometry,        // vector/matrix dimension mismatch
  kIncomplete,      // not enough responses to reconstruct
  kRobustness,      // too many corrupted responses to decode
  kBackpressure,    // precomputation queue exhausted
  kReplay,          // single-use item presented twice
  kMembership,      // signer key is not a ring member
  kInput,           // non-finite or out-of-domain numeric input
  kSolverExhausted, // puzzle solver gave up at its effort bound
  kCircuit,         // onion circuit could not be built or was torn down
  kProtocol,        // message did not fit the protocol state machine
  kUsage,           // bad configuration or command-line usage
};

std::string_view errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace qpadl
