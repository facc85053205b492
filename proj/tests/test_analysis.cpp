#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

#include "fixtures.hpp"
#include "memroi/analysis.hpp"

using namespace memroi;
using namespace memroi::testing;

namespace {

const Function& main_of(const Module& m) { return *m.find_function("main"); }

std::set<std::pair<std::string, std::string>> edges(const Cfg& c) {
  std::set<std::pair<std::string, std::string>> out;
  for (int v = 0; v < c.size(); ++v)
    for (int s : c.succs[v]) out.insert({c.labels[v], c.labels[s]});
  return out;
}

// Random digraph over n nodes plus a virtual exit (node n).
Cfg random_graph(std::mt19937_64& rng, int n) {
  Cfg c;
  c.succs.resize(n + 1);
  c.preds.resize(n + 1);
  for (int i = 0; i <= n; ++i) {
    c.labels.push_back(i == n ? "<exit>" : "n" + std::to_string(i));
    c.block_of.push_back(i == n ? -1 : i);
  }
  c.entry = 0;
  c.exit = n;
  for (int v = 0; v < n; ++v) {
    const int out = 1 + static_cast<int>(rng() % 2);
    std::set<int> targets;
    for (int k = 0; k < out; ++k) {
      // Mostly forward edges so that many graphs reach the exit.
      int t = rng() % 5 == 0 ? static_cast<int>(rng() % n) : v + 1 + static_cast<int>(rng() % 3);
      targets.insert(std::min(t, n));
    }
    for (int t : targets) {
      c.succs[v].push_back(t);
      c.preds[t].push_back(v);
    }
  }
  return c;
}

// Nodes reachable from `from` along `next` without entering `banned`.
std::vector<bool> reach(const std::vector<std::vector<int>>& next, int from, int banned) {
  std::vector<bool> seen(next.size(), false);
  if (from == banned) return seen;
  std::vector<int> stack{from};
  seen[from] = true;
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    for (int s : next[v])
      if (s != banned && !seen[s]) seen[s] = true, stack.push_back(s);
  }
  return seen;
}

// Immediate (post)dominator from brute-force dominance sets: a dominates b
// when removing a disconnects b from the root.
std::vector<int> brute_idom(const std::vector<std::vector<int>>& next, int root) {
  const int n = static_cast<int>(next.size());
  const auto base = reach(next, root, -1);
  std::vector<std::set<int>> dom(n);
  for (int a = 0; a < n; ++a) {
    const auto without = reach(next, root, a);
    for (int b = 0; b < n; ++b)
      if (base[b] && (a == b || !without[b])) dom[b].insert(a);
  }
  std::vector<int> idom(n, -1);
  for (int b = 0; b < n; ++b) {
    if (!base[b]) continue;
    if (b == root) {
      idom[b] = b;
      continue;
    }
    std::set<int> strict = dom[b];
    strict.erase(b);
    for (int x : strict)
      if (dom[x] == strict) idom[b] = x;
  }
  return idom;
}

}  // namespace

TEST(Cfg, StraightChainIsAPathToTheExit) {
  Module m = parse_module("func @main() {\na:\n  jmp b\nb:\n  jmp c\nc:\n  ret\n}\n");
  Cfg c = build_cfg(main_of(m));
  EXPECT_EQ(edges(c), (std::set<std::pair<std::string, std::string>>{{"a", "b"}, {"b", "c"}, {"c", "<exit>"}}));
}

TEST(Cfg, SideBlockEdges) {
  const Module m = load_fixture("sideblock.eir");
  Cfg c = build_cfg(main_of(m));
  EXPECT_EQ(edges(c), (std::set<std::pair<std::string, std::string>>{
                          {"A", "B"}, {"A", "C"}, {"B", "C"}, {"C", "<exit>"}}));
}

TEST(Cfg, TwoReturnsShareOneExit) {
  Module m = parse_module("func @main(x) {\na:\n  br x, b, c\nb:\n  ret 1\nc:\n  ret 2\n}\n");
  Cfg c = build_cfg(main_of(m));
  ASSERT_GE(c.exit, 0);
  EXPECT_EQ(c.preds[c.exit].size(), 2u);
  EXPECT_EQ(std::count(c.labels.begin(), c.labels.end(), "<exit>"), 1);
}

TEST(Cfg, NoExitWithoutReturn) {
  Module m = parse_module("func @main() {\na:\n  jmp b\nb:\n  jmp b\n}\n");
  EXPECT_EQ(build_cfg(main_of(m)).exit, -1);
}

TEST(PostDom, SideBlock) {
  const Module m = load_fixture("sideblock.eir");
  Cfg c = build_cfg(main_of(m));
  auto pd = postdominators(c).tree;
  const int A = c.node_of_label("A"), B = c.node_of_label("B"), C = c.node_of_label("C");
  EXPECT_EQ(pd.idom[A], C);
  EXPECT_EQ(pd.idom[B], C);
  EXPECT_EQ(pd.idom[C], c.exit);
}

TEST(PostDom, ChainEndPostDominatesEverything) {
  Module m = parse_module("func @main() {\na:\n  jmp b\nb:\n  jmp c\nc:\n  ret\n}\n");
  Cfg c = build_cfg(main_of(m));
  auto pd = postdominators(c).tree;
  const int C = c.node_of_label("c");
  EXPECT_TRUE(pd.dominates(C, c.node_of_label("a")));
  EXPECT_TRUE(pd.dominates(C, c.node_of_label("b")));
}

TEST(PostDom, NonTerminatingNodesAreReported) {
  Module m = parse_module("func @main(x) {\na:\n  br x, spin, out\nspin:\n  jmp spin\nout:\n  ret\n}\n");
  Cfg c = build_cfg(main_of(m));
  auto r = postdominators(c);
  EXPECT_EQ(r.non_terminating, std::vector<int>{c.node_of_label("spin")});
  EXPECT_FALSE(r.tree.covers(c.node_of_label("spin")));
}

TEST(PostDom, MatchesBruteForceOnRandomGraphs) {
  std::mt19937_64 rng(12345);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 49);
    Cfg c = random_graph(rng, n);
    auto r = postdominators(c);
    const auto expect = brute_idom(c.preds, c.exit);
    for (int v = 0; v < c.size(); ++v) {
      if (expect[v] < 0) {
        EXPECT_FALSE(r.tree.covers(v)) << "trial " << trial << " node " << v;
        EXPECT_TRUE(std::count(r.non_terminating.begin(), r.non_terminating.end(), v));
      } else {
        EXPECT_EQ(r.tree.idom[v], expect[v]) << "trial " << trial << " node " << v;
      }
    }
  }
}

TEST(Dom, MatchesBruteForceOnRandomGraphs) {
  std::mt19937_64 rng(777);
  for (int trial = 0; trial < 300; ++trial) {
    Cfg c = random_graph(rng, 2 + static_cast<int>(rng() % 49));
    DomTree d = dominators(c);
    const auto expect = brute_idom(c.succs, c.entry);
    for (int v = 0; v < c.size(); ++v) {
      if (expect[v] < 0) EXPECT_FALSE(d.covers(v));
      else EXPECT_EQ(d.idom[v], expect[v]) << "trial " << trial << " node " << v;
    }
  }
}

TEST(Loops, NaturalLoopsMatchBackEdgeClosure) {
  std::mt19937_64 rng(99);
  int reducible = 0, irreducible = 0;
  for (int trial = 0; trial < 400; ++trial) {
    Cfg c = random_graph(rng, 3 + static_cast<int>(rng() % 30));
    DomTree d = dominators(c);
    LoopForest f = find_loops(c, d);
    // Reducible iff the graph minus dominator back edges is acyclic.
    std::vector<std::vector<int>> forward(c.size());
    std::map<int, std::set<int>> expected;
    for (int v = 0; v < c.size(); ++v) {
      if (!d.covers(v)) continue;
      for (int s : c.succs[v]) {
        if (d.dominates(s, v)) {
          std::set<int>& body = expected[s];
          body.insert(s);
          const auto back = reach(c.preds, v, s);
          for (int u = 0; u < c.size(); ++u)
            if (back[u] && d.covers(u)) body.insert(u);
        } else {
          forward[v].push_back(s);
        }
      }
    }
    bool cyclic = false;
    std::vector<int> state(c.size(), 0);
    std::function<void(int)> dfs = [&](int v) {
      state[v] = 1;
      for (int s : forward[v]) {
        if (state[s] == 1) cyclic = true;
        else if (state[s] == 0) dfs(s);
      }
      state[v] = 2;
    };
    dfs(c.entry);
    const bool flagged = std::find(f.irreducible.begin(), f.irreducible.end(), true) != f.irreducible.end();
    EXPECT_EQ(flagged, cyclic) << "trial " << trial;
    if (cyclic) {
      ++irreducible;
      continue;
    }
    ++reducible;
    ASSERT_EQ(f.loops.size(), expected.size()) << "trial " << trial;
    for (const auto& l : f.loops) {
      ASSERT_TRUE(expected.count(l.header));
      EXPECT_EQ(std::set<int>(l.body.begin(), l.body.end()), expected[l.header]) << "trial " << trial;
      if (l.parent >= 0) {
        const auto& p = f.loops[l.parent].body;
        EXPECT_TRUE(std::includes(p.begin(), p.end(), l.body.begin(), l.body.end()));
      }
    }
  }
  EXPECT_GT(reducible, 50);
  EXPECT_GT(irreducible, 5);
}

TEST(Loops, LoopNestChildNestsInParent) {
  const Module m = load_fixture("loopnest.eir");
  const Function& fn = main_of(m);
  Cfg c = build_cfg(fn);
  LoopForest f = find_loops(c, dominators(c));
  ASSERT_EQ(f.loops.size(), 2u);
  const Loop& inner = f.loops[f.innermost[c.node_of_label("ibody")]];
  ASSERT_GE(inner.parent, 0);
  EXPECT_EQ(c.labels[inner.header], "inner");
  EXPECT_EQ(c.labels[f.loops[inner.parent].header], "outer");
  EXPECT_EQ(inner.depth, 2);
}

TEST(Loops, IrreducibleCycleHasNoLoop) {
  const Module m = load_fixture("irreducible.eir");
  const Function& fn = main_of(m);
  Cfg c = build_cfg(fn);
  LoopForest f = find_loops(c, dominators(c));
  EXPECT_TRUE(f.loops.empty());
  EXPECT_TRUE(f.irreducible[c.node_of_label("L")]);
  EXPECT_TRUE(f.irreducible[c.node_of_label("R")]);
}

namespace {

TripCount trip_of(std::string_view text, std::string_view header) {
  Module m = parse_module(text);
  const Function& fn = main_of(m);
  Cfg c = build_cfg(fn);
  LoopForest f = find_loops(c, dominators(c));
  classify_trip_counts(f, c, fn);
  for (const auto& l : f.loops)
    if (c.labels[l.header] == header) return l.trip;
  ADD_FAILURE() << "no loop at " << header;
  return {};
}

std::string counted(std::string_view pre, std::string_view bound, std::string_view body_extra) {
  return "func @main(n) {\npre:\n" + std::string(pre) +
         "  jmp header\nheader:\n  cmplt c, i, " + std::string(bound) +
         "\n  br c, body, exit\nbody:\n  load v, heap, 4\n" + std::string(body_extra) +
         "  add i, i, 1\n  jmp header\nexit:\n  ret\n}\n";
}

}  // namespace

TEST(TripCount, ConstantTen) {
  TripCount t = trip_of(counted("  const i, 0\n", "10", ""), "header");
  EXPECT_EQ(t.kind, TripCount::Kind::Constant);
  EXPECT_EQ(t.count, 10);
}

TEST(TripCount, RuntimeBound) {
  TripCount t = trip_of(counted("  const i, 0\n  add m, n, 0\n", "m", ""), "header");
  EXPECT_EQ(t.kind, TripCount::Kind::Runtime);
  EXPECT_EQ(t.bound, "m");
}

TEST(TripCount, BoundReassignedInBodyIsUnknown) {
  TripCount t = trip_of(counted("  const i, 0\n  add m, n, 0\n", "m", "  add m, m, 0\n"), "header");
  EXPECT_EQ(t.kind, TripCount::Kind::Unknown);
}

TEST(TripCount, InitFromParameterIsUnknown) {
  TripCount t = trip_of(counted("  add i, n, 0\n", "10", ""), "header");
  EXPECT_EQ(t.kind, TripCount::Kind::Unknown);
}

TEST(TripCount, InitThroughADiamond) {
  const char* text = R"(func @main(n) {
pre:
  const i, 2
  br n, l, r
l:
  jmp join
r:
  jmp join
join:
  jmp header
header:
  cmplt c, i, 9
  br c, body, exit
body:
  add i, i, 3
  jmp header
exit:
  ret
}
)";
  TripCount t = trip_of(text, "header");
  EXPECT_EQ(t.kind, TripCount::Kind::Constant);
  EXPECT_EQ(t.count, 3);  // 2, 5, 8
}

TEST(TripCount, ConflictingInitsAreUnknown) {
  const char* text = R"(func @main(n) {
pre:
  br n, l, r
l:
  const i, 0
  jmp join
r:
  const i, 1
  jmp join
join:
  jmp header
header:
  cmplt c, i, 9
  br c, body, exit
body:
  add i, i, 1
  jmp header
exit:
  ret
}
)";
  EXPECT_EQ(trip_of(text, "header").kind, TripCount::Kind::Unknown);
}

TEST(TripCount, EarlyExitIsUnknown) {
  const char* text = R"(func @main(n) {
pre:
  const i, 0
  jmp header
header:
  cmplt c, i, 10
  br c, body, exit
body:
  cmplt e, 4, i
  br e, exit, latch
latch:
  add i, i, 1
  jmp header
exit:
  ret
}
)";
  EXPECT_EQ(trip_of(text, "header").kind, TripCount::Kind::Unknown);
}

TEST(TripCount, ConstantMatchesExecutionOnGeneratedPrograms) {
  int checked = 0;
  for (std::uint64_t seed = 0; seed < 150; ++seed) {
    GenOptions go;
    go.seed = seed;
    go.profile = GenProfile::Loops;
    GenProgram g = generate(go);
    InstrumentResult r = instrument_text(g.text, gen_instrument_options(g));
    ExactProfile ex = run_oracle(r.baseline, gen_run_options(g));
    for (const auto& fn : r.baseline.functions) {
      Cfg c = build_cfg(fn);
      LoopForest f = find_loops(c, dominators(c));
      classify_trip_counts(f, c, fn);
      for (const auto& l : f.loops) {
        if (l.trip.kind != TripCount::Kind::Constant) continue;
        for (const auto& [roi, trace] : ex.threads[0].rois) {
          auto count = [&](int node) {
            auto it = trace.blocks.find({fn.name, c.labels[node]});
            return it == trace.blocks.end() ? std::uint64_t{0} : it->second;
          };
          // A guarded preheader may skip the loop, so count entries at the header.
          const std::uint64_t latch = count(l.trip.latch), header = count(l.header);
          if (header == 0) continue;
          ASSERT_GE(header, latch);
          EXPECT_EQ(latch, (header - latch) * static_cast<std::uint64_t>(l.trip.count))
              << "seed " << seed << " loop " << c.labels[l.header];
          ++checked;
        }
      }
    }
  }
  EXPECT_GT(checked, 20);
}

TEST(Analysis, DumpListsPostDominatorsAndLoops) {
  const std::string sideblock = dump_analysis(main_of(load_fixture("sideblock.eir")));
  EXPECT_NE(sideblock.find("ipostdom A C"), std::string::npos) << sideblock;
  EXPECT_NE(sideblock.find("ipostdom B C"), std::string::npos);
  EXPECT_NE(sideblock.find("ipostdom C <exit>"), std::string::npos);
  const std::string loopnest = dump_analysis(main_of(load_fixture("loopnest.eir")));
  EXPECT_NE(loopnest.find("loop inner depth 2"), std::string::npos) << loopnest;
  EXPECT_NE(loopnest.find("trip const 5"), std::string::npos);
  EXPECT_NE(loopnest.find("trip const 4"), std::string::npos);
}
