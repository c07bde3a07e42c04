#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "qpadl/common/bytes.hpp"

namespace qpadl::onion {

using NodeId = std::uint32_t;

inline constexpr std::size_t kCellBytes = 512;
inline constexpr std::size_t kCellPayload = kCellBytes - 5;

enum class CellCommand : std::uint8_t {
  kCreate = 1,
  kCreated = 2,
  kRelayForward = 3,
  kRelayBackward = 4,
  kDestroy = 5,
  kApp = 6,  // plaintext exit <-> destination stream
};

// circ_id (u32) | command (u8) | 507 payload bytes.
struct Cell {
  std::uint32_t circ = 0;
  CellCommand command = CellCommand::kDestroy;
  std::array<std::uint8_t, kCellPayload> payload{};

  Bytes encode() const;
  static Cell decode(ByteSpan frame);
};

enum class RelayCommand : std::uint8_t { kData = 1, kExtend = 2, kExtended = 3 };

// One piece of a message: u8 cmd | u32 msg id | u16 index | u16 count |
// u16 length | u32 destination | data, zero padded to the body size.
struct Fragment {
  RelayCommand command = RelayCommand::kData;
  std::uint32_t message = 0;
  std::uint16_t index = 0;
  std::uint16_t count = 1;
  NodeId destination = 0;
  Bytes data;

  static constexpr std::size_t kHeader = 15;
  Bytes encode(std::size_t body_size) const;
  static Fragment decode(ByteSpan body);
};

// Splits a message into fragments of at most body_size - header data bytes.
// An empty message still yields one fragment.
std::vector<Fragment> fragment(RelayCommand command, std::uint32_t message, NodeId destination, ByteSpan data,
                               std::size_t body_size);

// Collects fragments per message id; returns the whole message once complete.
class Reassembler {
 public:
  struct Message {
    RelayCommand command;
    NodeId destination;
    Bytes data;
  };
  // Throws kProtocol on inconsistent fragments.
  std::optional<Message> add(const Fragment& f);
  std::size_t pending() const { return partial_.size(); }

 private:
  struct Partial {
    RelayCommand command;
    NodeId destination;
    std::vector<std::optional<Bytes>> parts;
    std::size_t have = 0;
  };
  std::map<std::uint32_t, Partial> partial_;
};

}  // namespace qpadl::onion
