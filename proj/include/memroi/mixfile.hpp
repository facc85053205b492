#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "memroi/events.hpp"

namespace memroi {

struct RoiMix {
  std::string name;
  std::uint32_t bank_id = 0;
  std::uint32_t intrinsic_slots = 0;
  std::uint64_t period = 1;
  std::vector<EventTally> counters;  // indexed by bank counter index
  std::uint64_t uncovered_indirect = 0;
  std::uint64_t uncovered_extern = 0;

  bool operator==(const RoiMix&) const = default;
};

struct StaticMix {
  std::uint64_t module_hash = 0;
  std::vector<RoiMix> rois;  // sorted by name

  const RoiMix* find(std::string_view roi) const;
  bool operator==(const StaticMix&) const = default;
};

std::string write_mix(const StaticMix& m);
StaticMix read_mix(std::string_view text);

// Shared helpers for the line-oriented formats.
std::vector<std::string> split_ws(std::string_view line);
std::uint64_t parse_u64(std::string_view s, std::string_view what, std::size_t line);
std::uint64_t parse_hash(std::string_view s, std::size_t line);

}  // namespace memroi
