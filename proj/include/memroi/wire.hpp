#pragma once

// Binary monitor protocol. Every message travels as a frame: a 4-byte
// big-endian payload length, then the payload, which is a tag byte followed
// by big-endian fields. docs/protocol.md has the full layout.

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "memroi/counters.hpp"

namespace memroi {

inline constexpr std::uint16_t kProtocolVersion = 1;
inline constexpr std::uint32_t kMaxFrame = 64u << 20;

enum class MsgTag : std::uint8_t { Handshake = 1, PollRequest = 2, Snapshot = 3 };

struct PollRequest {
  std::uint64_t period = 0;
  bool operator==(const PollRequest&) const = default;
};

using Message = std::variant<Handshake, PollRequest, Snapshot>;

std::vector<std::uint8_t> encode(const Message& m);
// Throws Error("protocol error: ...") on malformed or trailing bytes.
Message decode(std::span<const std::uint8_t> payload);

// Length prefix + payload.
std::vector<std::uint8_t> frame(std::span<const std::uint8_t> payload);

}  // namespace memroi
