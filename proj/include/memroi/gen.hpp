#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace memroi {

enum class GenProfile { Mixed, Loops, ControlFlow };

GenProfile parse_profile(std::string_view name);
std::string_view profile_name(GenProfile p);

struct GenOptions {
  std::uint64_t seed = 0;
  GenProfile profile = GenProfile::Mixed;
  int max_blocks = 60;
  int max_depth = 3;  // loop / conditional nesting
  int max_rois = 2;
  bool recursion = true;
  bool externs = true;
  bool icalls = true;
  bool intrinsics = true;
};

struct GenProgram {
  std::string text;
  std::vector<std::int64_t> inputs;          // arguments for @main
  std::vector<std::string> also_instrument;  // icall targets, without '@'
};

// Random valid, terminating EIR program with at least one ROI in @main.
// Loops are counted, runtime bounded by small inputs, or bounded shapes the
// trip-count analysis cannot classify. Call depth stays within 3.
GenProgram generate(const GenOptions& opts);

}  // namespace memroi
