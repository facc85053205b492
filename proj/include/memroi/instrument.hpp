#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "memroi/analysis.hpp"
#include "memroi/eir.hpp"
#include "memroi/events.hpp"
#include "memroi/mixfile.hpp"

namespace memroi {

inline constexpr std::string_view kCloneSuffix = "__roi";
std::string clone_name(std::string_view fn);

struct RoiDescriptor {
  std::string name;
  std::string function;
  std::string start;                // block beginning with roi_begin; empty for an empty ROI
  std::vector<std::string> blocks;  // members in function order
  std::uint32_t bank_id = 0;
  std::uint32_t bank_size = 0;
  std::uint32_t intrinsic_slots = 0;
  std::uint64_t period = 1;

  bool operator==(const RoiDescriptor&) const = default;
};

struct SetMember {
  std::string label;
  std::uint64_t scale = 1;  // executions of the block per unit of the counter
  bool operator==(const SetMember&) const = default;
};

// A group of blocks covered by one counter.
struct PostDomSet {
  std::string leader;
  std::vector<SetMember> members;  // every block appears in exactly one set's members
  // Blocks also partly covered by this counter: the iterations of a loop
  // header whose trip count is added by a runtime increment.
  std::vector<SetMember> extra;
  std::uint32_t counter_index = 0;

  // Where the increment lives and how much it adds.
  std::string place;
  IncKind inc = IncKind::One;
  std::string bound;  // IncKind::Trip
  std::int64_t init = 0;
  std::int64_t step = 1;

  bool operator==(const PostDomSet&) const = default;
};

struct Hoist {
  std::string header;
  std::string preheader;
  TripCount::Kind kind = TripCount::Kind::Constant;
  std::int64_t trips = 0;  // Constant
  std::string bound;       // Runtime
  std::uint32_t counter_index = 0;
  bool operator==(const Hoist&) const = default;
};

// Counter plan for one instrumented region: an ROI's own blocks, or a whole
// cloned function. Counter and slot indices are relative to the region.
struct RegionPlan {
  std::string function;
  std::vector<std::string> blocks;
  std::vector<PostDomSet> sets;  // ordered by counter_index
  std::vector<Hoist> hoists;
  std::vector<std::string> synthetic_blocks;
  std::map<std::string, std::uint32_t> intrinsic_slot;  // block -> slot
  std::uint32_t intrinsic_slots = 0;
  std::vector<Diagnostic> notes;

  std::uint32_t counters() const { return static_cast<std::uint32_t>(sets.size()); }
  const PostDomSet* set_of(std::string_view label) const;
  // Total executions of `label` per unit of its counters; 0 if absent.
  std::uint64_t scale_of(std::string_view label) const;
};

struct PlanOptions {
  bool hoist = true;   // false: forced fallback, no loop folding
  bool naive = false;  // one counter per block
};

struct CounterPlan {
  std::vector<RoiDescriptor> rois;  // sorted by name; bank_id == position
  std::vector<RegionPlan> regions;  // parallel to rois
  std::map<std::string, RegionPlan> clones;         // clone name -> plan
  std::map<std::string, std::string> clone_table;   // original -> clone
  std::vector<std::vector<CloneRange>> clone_ranges;  // per ROI, sorted by clone name
  std::vector<std::uint64_t> uncovered_indirect;    // per ROI
  std::vector<std::uint64_t> uncovered_extern;      // per ROI
};

struct InstrumentOptions {
  std::uint64_t period = 1;
  std::vector<std::string> also_instrument;  // icall targets to clone, without '@'
  PlanOptions plan;
};

struct InstrumentResult {
  Module baseline;      // ROI markers split onto block boundaries; run the oracle on this
  Module normalized;    // baseline + clones + synthetic preheaders, no instrumentation
  Module instrumented;
  CounterPlan plan;
  StaticMix mix;
  std::vector<Diagnostic> diagnostics;
};

// Splits blocks so every roi_begin and roi_end starts its block. An end
// marker immediately after its begin marker is an empty ROI and is left alone.
std::pair<Module, std::vector<RoiDescriptor>> find_rois(const Module& m);

// Greedy grouping in reverse post-order: a block joins the set of an earlier
// leader it is control equivalent to (the leader dominates it, it
// post-dominates the leader, same innermost loop). Blocks in irreducible
// cycles or with no path to the exit stay alone. Scales are all 1.
std::vector<PostDomSet> superblock_partition(const Cfg& cfg, const DomTree& dom,
                                             const PostDomTree& pdom, const LoopForest& loops);

// Plans counters for `blocks` of `f` entered at `entry`. May add synthetic
// preheader blocks to `f` (and to the plan's block list).
RegionPlan plan_region(Function& f, std::vector<int> blocks, int entry, const PlanOptions& opts);

struct CloneResult {
  std::map<std::string, std::string> clone_table;
  std::vector<std::vector<std::string>> reachable;  // per ROI: clone names, sorted
  std::vector<std::uint64_t> uncovered_indirect;
  std::vector<std::uint64_t> uncovered_extern;
  std::vector<Diagnostic> diagnostics;
};

// Clones every function reachable from an ROI (memoized, recursion safe),
// strips ROI markers from the clones, and retargets calls inside ROIs and
// clones. Indirect-call targets are cloned only when listed in `also`.
CloneResult clone_functions(Module& m, const std::vector<RoiDescriptor>& rois,
                            const std::vector<std::string>& also);

// Inserts roi_enter/roi_exit, counter increments and intrinsic size updates,
// and declares one bank per ROI.
Module insert_instrumentation(const Module& normalized, const CounterPlan& plan);

StaticMix emit_static_mix(const Module& normalized, const CounterPlan& plan, std::uint64_t module_hash);

// The whole pass.
InstrumentResult instrument_module(const Module& m, const InstrumentOptions& opts);

// Human-readable plan, used by `instrument --dump-analysis`.
std::string describe_plan(const CounterPlan& plan);

}  // namespace memroi
