#include "memroi/analysis.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace memroi {

int Cfg::node_of_label(std::string_view label) const {
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == label && block_of[i] >= 0) return static_cast<int>(i);
  return -1;
}

namespace {

// Iterative DFS post-order over `next` from `root`.
std::vector<int> post_order_from(int root, const std::vector<std::vector<int>>& next) {
  std::vector<int> order;
  std::vector<char> seen(next.size(), 0);
  std::vector<std::pair<int, std::size_t>> stack{{root, 0}};
  seen[root] = 1;
  while (!stack.empty()) {
    auto& [n, i] = stack.back();
    if (i < next[n].size()) {
      int s = next[n][i++];
      if (!seen[s]) {
        seen[s] = 1;
        stack.push_back({s, 0});
      }
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }
  return order;
}

void add_edge(Cfg& g, int a, int b) {
  if (std::find(g.succs[a].begin(), g.succs[a].end(), b) != g.succs[a].end()) return;
  g.succs[a].push_back(b);
  g.preds[b].push_back(a);
}

// Cooper-Harvey-Kennedy over `fwd` edges with `back` as predecessors.
DomTree compute_idoms(int root, const std::vector<std::vector<int>>& fwd,
                      const std::vector<std::vector<int>>& back) {
  const int n = static_cast<int>(fwd.size());
  DomTree t;
  t.root = root;
  t.idom.assign(n, -1);
  t.depth.assign(n, 0);
  if (root < 0) return t;
  std::vector<int> po = post_order_from(root, fwd);
  std::vector<int> po_num(n, -1);
  for (std::size_t i = 0; i < po.size(); ++i) po_num[po[i]] = static_cast<int>(i);
  t.idom[root] = root;
  auto intersect = [&](int a, int b) {
    while (a != b) {
      while (po_num[a] < po_num[b]) a = t.idom[a];
      while (po_num[b] < po_num[a]) b = t.idom[b];
    }
    return a;
  };
  bool changed = true;
  while (changed) {
    changed = false;
    for (auto it = po.rbegin(); it != po.rend(); ++it) {
      int b = *it;
      if (b == root) continue;
      int nd = -1;
      for (int p : back[b]) {
        if (po_num[p] < 0 || t.idom[p] < 0) continue;
        nd = nd < 0 ? p : intersect(p, nd);
      }
      if (nd >= 0 && t.idom[b] != nd) {
        t.idom[b] = nd;
        changed = true;
      }
    }
  }
  for (auto it = po.rbegin(); it != po.rend(); ++it)
    if (*it != root && t.idom[*it] >= 0) t.depth[*it] = t.depth[t.idom[*it]] + 1;
  return t;
}

}  // namespace

std::vector<int> Cfg::reverse_post_order() const {
  std::vector<int> po = post_order_from(entry, succs);
  std::vector<int> rpo;
  for (auto it = po.rbegin(); it != po.rend(); ++it)
    if (*it != exit) rpo.push_back(*it);
  return rpo;
}

Cfg build_cfg(const Function& f) {
  std::vector<int> all(f.blocks.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
  Cfg g = build_region_cfg(f, all, 0);
  return g;
}

Cfg build_region_cfg(const Function& f, std::span<const int> blocks, int entry_block) {
  Cfg g;
  std::map<std::string, int> node;
  for (int b : blocks) {
    node[f.blocks[b].label] = static_cast<int>(g.labels.size());
    g.labels.push_back(f.blocks[b].label);
    g.block_of.push_back(b);
  }
  const int n = static_cast<int>(g.labels.size());
  g.succs.assign(n, {});
  g.preds.assign(n, {});
  std::vector<std::pair<int, int>> edges;
  bool needs_exit = false;
  for (int i = 0; i < n; ++i) {
    const Block& b = f.blocks[g.block_of[i]];
    if (b.instrs.empty()) continue;
    if (b.terminator().op == Opcode::Ret) {
      edges.push_back({i, -1});
      needs_exit = true;
    }
    for (const auto& s : b.successors()) {
      auto it = node.find(s);
      if (it == node.end()) {
        edges.push_back({i, -1});
        needs_exit = true;
      } else {
        edges.push_back({i, it->second});
      }
    }
  }
  if (needs_exit) {
    g.exit = n;
    g.labels.push_back("<exit>");
    g.block_of.push_back(-1);
    g.succs.emplace_back();
    g.preds.emplace_back();
  }
  for (auto [a, b] : edges) add_edge(g, a, b < 0 ? g.exit : b);
  g.entry = 0;
  for (int i = 0; i < n; ++i)
    if (g.block_of[i] == entry_block) g.entry = i;
  return g;
}

bool DomTree::dominates(int a, int b) const {
  if (!covers(a) || !covers(b)) return false;
  while (depth[b] > depth[a]) b = idom[b];
  return a == b;
}

DomTree dominators(const Cfg& cfg) { return compute_idoms(cfg.entry, cfg.succs, cfg.preds); }

PostDomResult postdominators(const Cfg& cfg) {
  PostDomResult r;
  r.tree = compute_idoms(cfg.exit, cfg.preds, cfg.succs);
  for (int i = 0; i < cfg.size(); ++i)
    if (i != cfg.exit && !r.tree.covers(i)) r.non_terminating.push_back(i);
  return r;
}

bool Loop::contains(int node) const { return std::binary_search(body.begin(), body.end(), node); }

std::vector<int> LoopForest::post_order() const {
  std::vector<int> order;
  std::function<void(int)> visit = [&](int l) {
    for (int c : loops[l].children) visit(c);
    order.push_back(l);
  };
  for (std::size_t i = 0; i < loops.size(); ++i)
    if (loops[i].parent < 0) visit(static_cast<int>(i));
  return order;
}

namespace {

// Tarjan SCC ids per node (exit excluded by the caller's graph shape).
std::vector<int> scc_ids(const Cfg& cfg) {
  const int n = cfg.size();
  std::vector<int> index(n, -1), low(n, 0), comp(n, -1);
  std::vector<char> on_stack(n, 0);
  std::vector<int> stack;
  int counter = 0, comps = 0;
  std::function<void(int)> strong = [&](int v) {
    index[v] = low[v] = counter++;
    stack.push_back(v);
    on_stack[v] = 1;
    for (int w : cfg.succs[v]) {
      if (index[w] < 0) {
        strong(w);
        low[v] = std::min(low[v], low[w]);
      } else if (on_stack[w]) {
        low[v] = std::min(low[v], index[w]);
      }
    }
    if (low[v] == index[v]) {
      int w;
      do {
        w = stack.back();
        stack.pop_back();
        on_stack[w] = 0;
        comp[w] = comps;
      } while (w != v);
      ++comps;
    }
  };
  for (int v = 0; v < n; ++v)
    if (index[v] < 0) strong(v);
  return comp;
}

}  // namespace

LoopForest find_loops(const Cfg& cfg, const DomTree& dom) {
  const int n = cfg.size();
  LoopForest forest;
  forest.innermost.assign(n, -1);
  forest.irreducible.assign(n, false);

  // Retreating edges from a DFS; those whose target does not dominate the
  // source close a multi-entry cycle.
  std::vector<int> state(n, 0);  // 0 new, 1 on stack, 2 done
  std::vector<std::pair<int, int>> back_edges, bad_edges;
  std::vector<std::pair<int, std::size_t>> stack{{cfg.entry, 0}};
  state[cfg.entry] = 1;
  while (!stack.empty()) {
    auto& [v, i] = stack.back();
    if (i < cfg.succs[v].size()) {
      int w = cfg.succs[v][i++];
      if (state[w] == 0) {
        state[w] = 1;
        stack.push_back({w, 0});
      } else if (state[w] == 1) {
        if (dom.dominates(w, v)) back_edges.push_back({v, w});
        else bad_edges.push_back({v, w});
      }
    } else {
      state[v] = 2;
      stack.pop_back();
    }
  }
  // A back edge can also be found as a cross edge in DFS order when the
  // target was finished first; collect all dominance back edges directly.
  for (int v = 0; v < n; ++v) {
    if (!dom.covers(v)) continue;
    for (int w : cfg.succs[v])
      if (dom.dominates(w, v) &&
          std::find(back_edges.begin(), back_edges.end(), std::make_pair(v, w)) == back_edges.end())
        back_edges.push_back({v, w});
  }

  if (!bad_edges.empty()) {
    std::vector<int> comp = scc_ids(cfg);
    for (auto [v, w] : bad_edges)
      for (int u = 0; u < n; ++u)
        if (comp[u] == comp[v]) forest.irreducible[u] = true;
  }

  std::map<int, std::vector<int>> latches;
  for (auto [t, h] : back_edges) latches[h].push_back(t);
  for (auto& [h, ls] : latches) {
    Loop loop;
    loop.header = h;
    std::sort(ls.begin(), ls.end());
    loop.latches = ls;
    std::set<int> body{h};
    std::deque<int> work;
    for (int t : ls)
      if (body.insert(t).second) work.push_back(t);
    while (!work.empty()) {
      int v = work.front();
      work.pop_front();
      for (int p : cfg.preds[v])
        if (dom.covers(p) && body.insert(p).second) work.push_back(p);
    }
    loop.body.assign(body.begin(), body.end());
    for (int v : loop.body)
      if (forest.irreducible[v]) loop.has_irreducible = true;
    forest.loops.push_back(std::move(loop));
  }

  // Parent = smallest strictly larger loop containing the header.
  auto& loops = forest.loops;
  for (std::size_t i = 0; i < loops.size(); ++i) {
    int best = -1;
    for (std::size_t j = 0; j < loops.size(); ++j) {
      if (i == j || !loops[j].contains(loops[i].header) || loops[j].body.size() <= loops[i].body.size())
        continue;
      if (best < 0 || loops[j].body.size() < loops[best].body.size()) best = static_cast<int>(j);
    }
    loops[i].parent = best;
    if (best >= 0) loops[best].children.push_back(static_cast<int>(i));
  }
  for (auto& l : loops) {
    int d = 1;
    for (int p = l.parent; p >= 0; p = loops[p].parent) ++d;
    l.depth = d;
  }
  for (int v = 0; v < n; ++v) {
    int best = -1;
    for (std::size_t j = 0; j < loops.size(); ++j)
      if (loops[j].contains(v) && (best < 0 || loops[j].body.size() < loops[best].body.size()))
        best = static_cast<int>(j);
    forest.innermost[v] = best;
  }
  return forest;
}

namespace {

// Last instruction in `b` that assigns `reg`, or nullptr.
const Instr* last_def(const Block& b, const std::string& reg) {
  const Instr* found = nullptr;
  for (const auto& in : b.instrs)
    if (in.dst == reg) found = &in;
  return found;
}

int count_defs(const Block& b, const std::string& reg) {
  int c = 0;
  for (const auto& in : b.instrs)
    if (in.dst == reg) ++c;
  return c;
}

// Value of `reg` flowing out of block `bi` when every definition reaching
// that point is the same constant.
std::optional<std::int64_t> constant_on_entry(const Function& f, int bi, const std::string& reg) {
  const int n = static_cast<int>(f.blocks.size());
  std::vector<std::vector<int>> preds(n);
  for (int i = 0; i < n; ++i)
    for (const auto& s : f.blocks[i].successors())
      if (int j = f.block_index(s); j >= 0) preds[j].push_back(i);
  // Sites are (block, instruction); (-1, -1) stands for the value on function entry.
  using Site = std::pair<int, int>;
  std::vector<std::optional<Site>> gen(n);
  for (int b = 0; b < n; ++b)
    for (std::size_t i = 0; i < f.blocks[b].instrs.size(); ++i)
      if (f.blocks[b].instrs[i].dst == reg) gen[b] = Site{b, static_cast<int>(i)};
  std::vector<std::set<Site>> out(n);
  bool changed = true;
  while (changed) {
    changed = false;
    for (int b = 0; b < n; ++b) {
      std::set<Site> next;
      if (gen[b]) {
        next.insert(*gen[b]);
      } else {
        if (b == 0) next.insert({-1, -1});
        for (int p : preds[b]) next.insert(out[p].begin(), out[p].end());
      }
      if (next != out[b]) {
        out[b] = std::move(next);
        changed = true;
      }
    }
  }
  std::optional<std::int64_t> value;
  for (const auto& [b, i] : out[bi]) {
    if (b < 0) return std::nullopt;
    const Instr& d = f.blocks[b].instrs[i];
    if (d.op != Opcode::Const) return std::nullopt;
    if (value && *value != d.args[0].imm) return std::nullopt;
    value = d.args[0].imm;
  }
  return value;
}

}  // namespace

TripCount trip_count(const Loop& loop, const LoopForest& forest, const Cfg& cfg, const Function& f) {
  TripCount unknown;
  if (loop.has_irreducible || loop.latches.size() != 1) return unknown;
  const int h = loop.header;
  const int latch = loop.latches[0];
  if (latch == h) return unknown;
  int self = -1;
  for (std::size_t i = 0; i < forest.loops.size(); ++i)
    if (&forest.loops[i] == &loop) self = static_cast<int>(i);
  if (self < 0 || forest.innermost[latch] != self) return unknown;

  // Single exit, taken from the header.
  for (int v : loop.body) {
    for (int s : cfg.succs[v]) {
      if (loop.contains(s)) continue;
      if (v != h) return unknown;
    }
  }
  if (cfg.succs[h].size() != 2) return unknown;

  int preheader = -1;
  for (int p : cfg.preds[h]) {
    if (loop.contains(p)) continue;
    if (preheader >= 0) return unknown;
    preheader = p;
  }
  if (preheader < 0 || cfg.block_of[preheader] < 0) return unknown;

  const Block& hb = f.blocks[cfg.block_of[h]];
  const Instr& br = hb.terminator();
  if (br.op != Opcode::Br) return unknown;
  const int taken = cfg.node_of_label(br.target);
  if (taken < 0 || !loop.contains(taken) || loop.contains(cfg.node_of_label(br.alt))) return unknown;
  if (br.alt == br.target) return unknown;

  const std::string& cond = br.args[0].reg;
  const Instr* cmp = last_def(hb, cond);
  if (!cmp || cmp->op != Opcode::CmpLt || cmp->args[0].is_imm) return unknown;
  const std::string ivar = cmp->args[0].reg;
  const Operand& bound = cmp->args[1];
  if (!bound.is_imm && bound.reg == ivar) return unknown;

  // The induction variable is assigned exactly once in the loop: in the latch.
  const Block& lb = f.blocks[cfg.block_of[latch]];
  if (lb.terminator().op != Opcode::Jmp) return unknown;
  for (int v : loop.body) {
    const Block& b = f.blocks[cfg.block_of[v]];
    int defs = count_defs(b, ivar);
    if (v == latch ? defs != 1 : defs != 0) return unknown;
    if (!bound.is_imm && count_defs(b, bound.reg) != 0) return unknown;
  }
  const Instr* upd = last_def(lb, ivar);
  if (upd->op != Opcode::Add) return unknown;
  std::int64_t step = 0;
  if (!upd->args[0].is_imm && upd->args[0].reg == ivar && upd->args[1].is_imm) step = upd->args[1].imm;
  else if (!upd->args[1].is_imm && upd->args[1].reg == ivar && upd->args[0].is_imm) step = upd->args[0].imm;
  else return unknown;
  if (step <= 0) return unknown;

  auto init = constant_on_entry(f, cfg.block_of[preheader], ivar);
  if (!init) return unknown;

  TripCount t;
  t.ivar = ivar;
  t.init = *init;
  t.step = step;
  t.preheader = preheader;
  t.latch = latch;
  if (bound.is_imm) {
    if (bound.imm <= *init) return unknown;
    const auto span = static_cast<std::uint64_t>(bound.imm) - static_cast<std::uint64_t>(*init);
    t.kind = TripCount::Kind::Constant;
    t.count = static_cast<std::int64_t>((span + static_cast<std::uint64_t>(step) - 1) /
                                        static_cast<std::uint64_t>(step));
  } else {
    t.kind = TripCount::Kind::Runtime;
    t.bound = bound.reg;
  }
  return t;
}

void classify_trip_counts(LoopForest& forest, const Cfg& cfg, const Function& f) {
  for (auto& l : forest.loops) l.trip = trip_count(l, forest, cfg, f);
}

std::string dump_analysis(const Function& f) {
  std::ostringstream os;
  Cfg cfg = build_cfg(f);
  auto pd = postdominators(cfg);
  DomTree dom = dominators(cfg);
  LoopForest forest = find_loops(cfg, dom);
  classify_trip_counts(forest, cfg, f);
  os << "function @" << f.name << "\n";
  for (int v = 0; v < cfg.size(); ++v) {
    if (v == cfg.exit) continue;
    os << "  ipostdom " << cfg.labels[v] << " ";
    if (pd.tree.covers(v)) os << cfg.labels[pd.tree.idom[v]];
    else os << "<non-terminating>";
    os << "\n";
  }
  for (int li : forest.post_order()) {
    const Loop& l = forest.loops[li];
    os << "  loop " << cfg.labels[l.header] << " depth " << l.depth << " body";
    for (int v : l.body) os << " " << cfg.labels[v];
    if (l.parent >= 0) os << " parent " << cfg.labels[forest.loops[l.parent].header];
    switch (l.trip.kind) {
      case TripCount::Kind::Constant: os << " trip const " << l.trip.count; break;
      case TripCount::Kind::Runtime: os << " trip runtime " << l.trip.bound; break;
      case TripCount::Kind::Unknown: os << " trip unknown"; break;
    }
    os << "\n";
  }
  for (int v = 0; v < cfg.size(); ++v)
    if (v != cfg.exit && forest.irreducible[v]) os << "  irreducible " << cfg.labels[v] << "\n";
  return os.str();
}

}  // namespace memroi
