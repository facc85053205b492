#pragma once

#include <cstdint>

#include "memroi/eir.hpp"

namespace memroi {

// Event and byte tallies for a block, a counter set, or a whole ROI.
// Loads and stores count heap/global accesses only, including the estimated
// access operations of intrinsics; stack accesses go to stack_ops.
struct EventTally {
  std::uint64_t int_ops = 0;
  std::uint64_t fp_ops = 0;
  std::uint64_t loads = 0;
  std::uint64_t stores = 0;
  std::uint64_t branches = 0;
  std::uint64_t jumps = 0;
  std::uint64_t calls = 0;
  std::uint64_t rets = 0;
  std::uint64_t intrinsics = 0;
  std::uint64_t stack_ops = 0;
  std::uint64_t bytes_read = 0;
  std::uint64_t bytes_written = 0;

  bool operator==(const EventTally&) const = default;

  EventTally& operator+=(const EventTally& o);
  EventTally scaled(std::uint64_t k) const;  // saturating
  bool empty() const { return *this == EventTally{}; }

  // Dynamic instruction count, excluding instrumentation pseudo-ops.
  std::uint64_t instructions() const;
  std::uint64_t memory_accesses() const { return loads + stores; }
};

// Intrinsic transfers are assumed to move 8 bytes per access operation.
inline std::uint64_t intrinsic_ops(std::uint64_t bytes) { return (bytes + 7) / 8; }

// Adds the bytes and estimated operations of an intrinsic moving `bytes`.
void add_intrinsic_bytes(EventTally& t, Opcode op, std::uint64_t bytes);

// Static contribution of one instruction. Constant-length intrinsics include
// their bytes; register-length ones only count the intrinsic event itself.
EventTally tally_of(const Instr& in);
// Sum over a block; synthetic blocks contribute nothing.
EventTally tally_of(const Block& b);

std::uint64_t saturating_add(std::uint64_t a, std::uint64_t b);
std::uint64_t saturating_mul(std::uint64_t a, std::uint64_t b);

}  // namespace memroi
