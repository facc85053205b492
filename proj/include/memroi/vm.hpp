#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "memroi/counters.hpp"
#include "memroi/eir.hpp"
#include "memroi/events.hpp"

namespace memroi {

// Cycle costs. roi_gate, ctr_gate and observer extend the base table: the
// bookkeeping of roi_enter/roi_exit, a disabled increment's enable check, and
// the cost charged to the VM per monitor snapshot.
struct CostModel {
  std::uint64_t int_op = 1;
  std::uint64_t fp_op = 2;
  std::uint64_t mem_op = 4;
  std::uint64_t branch = 1;
  std::uint64_t jump = 1;
  std::uint64_t call = 2;
  std::uint64_t ret = 1;
  std::uint64_t ctr_inc = 9;
  std::uint64_t timer_read = 20;
  std::uint64_t hwctr_read = 600;
  std::uint64_t intrinsic_word = 4;  // per 8-byte word moved
  std::uint64_t roi_gate = 2;
  std::uint64_t ctr_gate = 1;
  std::uint64_t observer = 0;
  bool hw_counters = false;
  std::uint32_t hw_reads = 3;  // per ROI boundary when hw_counters is on

  bool operator==(const CostModel&) const = default;
};

// "default" or comma-separated key=value overrides, e.g. "ctr_inc=12,hw=1".
CostModel parse_cost_model(std::string_view spec);

struct ThreadSpec {
  std::string entry;  // empty: the module's entry function
  std::vector<std::int64_t> input;
  bool operator==(const ThreadSpec&) const = default;
};

// "main:1,2;main:3" -> two threads.
std::vector<ThreadSpec> parse_thread_specs(std::string_view spec);

struct RunOptions {
  CostModel cost;
  std::vector<ThreadSpec> threads;  // empty: one thread, entry function, no input
  std::uint64_t step_limit = 1'000'000'000;
  SnapshotSink* sink = nullptr;
};

struct RunArtifacts {
  std::vector<std::int64_t> exit_codes;  // per thread
  CounterDump dump;
  std::uint64_t total_cycles = 0;           // sum over threads
  std::uint64_t instrumentation_cycles = 0;  // pseudo-ops, gates, synthetic blocks
  std::vector<std::uint64_t> thread_cycles;
  std::uint64_t steps = 0;
};

RunArtifacts run(const Module& m, const RunOptions& opts);

struct RoiTrace {
  EventTally events;
  std::uint64_t hits = 0;
  std::uint64_t cycles = 0;
  // (function, block) -> entries while the ROI was active.
  std::map<std::pair<std::string, std::string>, std::uint64_t> blocks;
  bool operator==(const RoiTrace&) const = default;
};

struct ThreadTrace {
  std::map<std::string, RoiTrace> rois;
  std::uint64_t cycles = 0;
  std::int64_t exit_code = 0;
};

struct ExactProfile {
  std::vector<ThreadTrace> threads;
  std::uint64_t total_cycles = 0;
  std::vector<std::string> rois;  // every ROI named in the module, sorted
};

// Exact per-instruction trace of an uninstrumented module. Events are
// attributed to the ROI active on the executing thread, through calls.
ExactProfile run_oracle(const Module& m, const RunOptions& opts);

}  // namespace memroi
