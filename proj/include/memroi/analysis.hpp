#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "memroi/eir.hpp"

namespace memroi {

// Control-flow graph over a function, or over a single-entry region of one.
// Nodes are dense indices; `block_of` maps a node back to its function block.
// The virtual exit, when present, is the last node and has no block.
struct Cfg {
  std::vector<std::string> labels;  // labels[exit] == "<exit>"
  std::vector<int> block_of;        // -1 for the virtual exit
  std::vector<std::vector<int>> succs;
  std::vector<std::vector<int>> preds;
  int entry = 0;
  int exit = -1;  // -1 when nothing leaves the graph

  int size() const { return static_cast<int>(succs.size()); }
  int node_of_label(std::string_view label) const;
  // Reverse post-order over nodes reachable from the entry (exit excluded).
  std::vector<int> reverse_post_order() const;
};

Cfg build_cfg(const Function& f);
// `blocks` are function block indices; edges leaving the set and `ret`
// terminators go to the virtual exit.
Cfg build_region_cfg(const Function& f, std::span<const int> blocks, int entry_block);

// Immediate-dominator tree. For post-dominators the root is the virtual exit.
struct DomTree {
  int root = -1;
  std::vector<int> idom;  // idom[root] == root; -1 for nodes the root cannot see
  std::vector<int> depth;

  bool covers(int n) const { return n >= 0 && n < static_cast<int>(idom.size()) && idom[n] >= 0; }
  // a dominates b (reflexive). False when either node is not covered.
  bool dominates(int a, int b) const;
};

using PostDomTree = DomTree;

DomTree dominators(const Cfg& cfg);

struct PostDomResult {
  PostDomTree tree;
  std::vector<int> non_terminating;  // nodes with no path to the exit
};
PostDomResult postdominators(const Cfg& cfg);

struct TripCount {
  enum class Kind { Constant, Runtime, Unknown };
  Kind kind = Kind::Unknown;
  std::int64_t count = 0;  // Constant
  std::string bound;       // Runtime: register holding the bound
  std::string ivar;        // induction register
  std::int64_t init = 0;
  std::int64_t step = 1;
  int preheader = -1;  // unique out-of-loop predecessor node (Constant/Runtime)
  int latch = -1;

  bool operator==(const TripCount&) const = default;
};

struct Loop {
  int header = -1;
  std::vector<int> body;     // sorted node indices, header included
  std::vector<int> latches;  // sources of back edges
  int parent = -1;           // index into LoopForest::loops
  std::vector<int> children;
  int depth = 1;
  bool has_irreducible = false;
  TripCount trip;

  bool contains(int node) const;
};

struct LoopForest {
  std::vector<Loop> loops;
  std::vector<int> innermost;     // per node, -1 when in no loop
  std::vector<bool> irreducible;  // per node: part of a multi-entry cycle

  // Loop indices with children before parents.
  std::vector<int> post_order() const;
};

LoopForest find_loops(const Cfg& cfg, const DomTree& dom);

// Classifies the canonical counted-loop shape
//   pre: const i, K   header: cmplt c, i, B; br c, body, out   latch: add i, i, S; jmp header
// Constant when K and B are immediates, Runtime when B is a register the loop
// never assigns, Unknown otherwise (including multi-exit loops).
TripCount trip_count(const Loop& loop, const LoopForest& forest, const Cfg& cfg, const Function& f);

// Classifies every loop of the forest in place.
void classify_trip_counts(LoopForest& forest, const Cfg& cfg, const Function& f);

// Text dump of the post-dominator tree and loop forest, used by fixture tests.
std::string dump_analysis(const Function& f);

}  // namespace memroi
