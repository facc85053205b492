#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "memroi/instrument.hpp"
#include "memroi/postprocess.hpp"
#include "memroi/vm.hpp"

namespace memroi {

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view text);
Module load_module(const std::string& path);

// One (thread, ROI) pair: the mix rebuilt from counters next to the exact trace.
struct MixPair {
  std::uint32_t thread = 0;
  std::string roi;
  EventTally reconstructed;
  EventTally exact;
  bool equal() const { return reconstructed == exact; }
};

struct OracleCheck {
  std::vector<MixPair> pairs;
  RunArtifacts instrumented_run;
  ExactProfile oracle;

  bool exact() const;
  std::string mismatches() const;
};

// Runs the instrumented module and the oracle on its baseline with the same
// threads and cost model, and pairs up the per-ROI mixes. Only meaningful
// when the module was instrumented with period 1.
OracleCheck check_against_oracle(const InstrumentResult& r, const RunOptions& opts);

// Per-thread, per-ROI reconstructed mixes of a run, in dump order.
std::vector<MixPair> reconstructed_mixes(const StaticMix& mix, const CounterDump& dump);

std::string describe_tally(const EventTally& t);

}  // namespace memroi
