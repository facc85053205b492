#include "memroi/instrument.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

namespace memroi {

const PostDomSet* RegionPlan::set_of(std::string_view label) const {
  for (const auto& s : sets)
    for (const auto& m : s.members)
      if (m.label == label) return &s;
  return nullptr;
}

std::uint64_t RegionPlan::scale_of(std::string_view label) const {
  for (const auto& s : sets)
    for (const auto& m : s.members)
      if (m.label == label) return m.scale;
  return 0;
}

namespace {

struct Cls {
  int leader = -1;
  std::vector<std::pair<int, std::uint64_t>> members;
  std::vector<std::pair<int, std::uint64_t>> extra;
  bool alive = true;
  bool trip = false;
  int place = -1;
  TripCount tc;
};

std::vector<Cls> partition_nodes(const Cfg& cfg, const DomTree& dom, const PostDomTree& pdom,
                                 const LoopForest& loops) {
  std::vector<Cls> classes;
  std::vector<bool> forced;
  for (int v : cfg.reverse_post_order()) {
    const bool alone = loops.irreducible[v] || !pdom.covers(v);
    bool joined = false;
    if (!alone) {
      for (std::size_t c = 0; c < classes.size(); ++c) {
        if (forced[c]) continue;
        const int l = classes[c].leader;
        if (loops.innermost[l] == loops.innermost[v] && dom.dominates(l, v) && pdom.dominates(v, l)) {
          classes[c].members.push_back({v, 1});
          joined = true;
          break;
        }
      }
    }
    if (!joined) {
      Cls c;
      c.leader = v;
      c.place = v;
      c.members.push_back({v, 1});
      classes.push_back(std::move(c));
      forced.push_back(alone);
    }
  }
  return classes;
}

std::string fresh_label(const Function& f, const std::string& base) {
  if (!f.find_block(base)) return base;
  for (int k = 1;; ++k) {
    std::string l = base + "." + std::to_string(k);
    if (!f.find_block(l)) return l;
  }
}

bool has_runtime_intrinsic(const Block& b) {
  for (const auto& in : b.instrs)
    if (is_intrinsic(in.op) && !in.args[0].is_imm) return true;
  return false;
}

}  // namespace

std::vector<PostDomSet> superblock_partition(const Cfg& cfg, const DomTree& dom,
                                             const PostDomTree& pdom, const LoopForest& loops) {
  std::vector<PostDomSet> out;
  for (const auto& c : partition_nodes(cfg, dom, pdom, loops)) {
    PostDomSet s;
    s.leader = cfg.labels[c.leader];
    s.place = s.leader;
    for (auto [v, k] : c.members) s.members.push_back({cfg.labels[v], k});
    s.counter_index = static_cast<std::uint32_t>(out.size());
    out.push_back(std::move(s));
  }
  return out;
}

RegionPlan plan_region(Function& f, std::vector<int> blocks, int entry, const PlanOptions& opts) {
  RegionPlan plan;
  plan.function = f.name;
  std::vector<std::string> labels;
  for (int b : blocks) labels.push_back(f.blocks[b].label);
  const std::string entry_label = f.blocks[entry].label;

  Cfg cfg;
  DomTree dom;
  PostDomResult pd;
  LoopForest forest;
  auto analyze = [&] {
    std::vector<int> idx;
    for (const auto& l : labels) idx.push_back(f.block_index(l));
    cfg = build_region_cfg(f, idx, f.block_index(entry_label));
    dom = dominators(cfg);
    pd = postdominators(cfg);
    forest = find_loops(cfg, dom);
    classify_trip_counts(forest, cfg, f);
  };
  analyze();

  // Counted loops need a preheader that jumps straight to the header so the
  // hoisted increment runs once per loop entry.
  if (opts.hoist && !opts.naive) {
    bool inserted = false;
    for (const auto& loop : forest.loops) {
      if (loop.trip.kind == TripCount::Kind::Unknown) continue;
      Block& pre = f.blocks[cfg.block_of[loop.trip.preheader]];
      if (pre.terminator().op == Opcode::Jmp) continue;
      const std::string header = cfg.labels[loop.header];
      Block ph;
      ph.label = fresh_label(f, header + ".ph");
      ph.synthetic = true;
      ph.instrs.push_back(Instr::make_jmp(header));
      Instr& term = pre.terminator();
      if (term.target == header) term.target = ph.label;
      if (term.alt == header) term.alt = ph.label;
      plan.synthetic_blocks.push_back(ph.label);
      labels.push_back(ph.label);
      f.blocks.insert(f.blocks.begin() + f.block_index(header), std::move(ph));
      inserted = true;
    }
    if (inserted) analyze();
  }

  std::vector<Cls> classes;
  if (opts.naive) {
    for (int v : cfg.reverse_post_order()) {
      Cls c;
      c.leader = c.place = v;
      c.members.push_back({v, 1});
      classes.push_back(std::move(c));
    }
  } else {
    classes = partition_nodes(cfg, dom, pd.tree, forest);
  }

  std::vector<int> home(cfg.size(), -1);
  for (std::size_t c = 0; c < classes.size(); ++c)
    for (auto [v, k] : classes[c].members) home[v] = static_cast<int>(c);
  auto scale_in = [&](int c, int v) -> std::uint64_t {
    for (auto [u, k] : classes[c].members)
      if (u == v) return k;
    return 1;
  };
  auto move_into = [&](int from, int to, std::uint64_t factor) {
    for (auto [v, k] : classes[from].members) {
      classes[to].members.push_back({v, saturating_mul(k, factor)});
      home[v] = to;
    }
    classes[from].members.clear();
    classes[from].alive = false;
  };

  struct PendingHoist {
    Hoist h;
    int cls;
    int node;  // constant hoists follow the preheader's class through later folds
  };
  std::vector<PendingHoist> pending;
  if (opts.hoist && !opts.naive) {
    for (int li : forest.post_order()) {
      const Loop& loop = forest.loops[li];
      const TripCount& tc = loop.trip;
      if (tc.kind == TripCount::Kind::Unknown) continue;
      const int p = tc.preheader;
      if (f.blocks[cfg.block_of[p]].terminator().op != Opcode::Jmp) continue;
      const int k = home[p], hc = home[loop.header], ic = home[tc.latch];
      if (k < 0 || hc < 0 || ic < 0 || k == hc || k == ic || hc == ic) continue;
      if (classes[hc].trip || classes[ic].trip || classes[hc].members.size() != 1) continue;
      const std::uint64_t sp = scale_in(k, p);
      Hoist h;
      h.header = cfg.labels[loop.header];
      h.preheader = cfg.labels[p];
      h.kind = tc.kind;
      if (tc.kind == TripCount::Kind::Constant) {
        const auto n = static_cast<std::uint64_t>(tc.count);
        // A top-tested header runs once more than the body.
        move_into(hc, k, saturating_mul(sp, n + 1));
        move_into(ic, k, saturating_mul(sp, n));
        h.trips = tc.count;
        pending.push_back({h, k, p});
      } else {
        move_into(hc, k, sp);
        Cls& it = classes[ic];
        it.trip = true;
        it.place = p;
        it.tc = tc;
        it.extra.push_back({loop.header, 1});
        h.bound = tc.bound;
        pending.push_back({h, ic, -1});
      }
    }
  }

  // Synthetic-only classes carry no events.
  for (auto& c : classes) {
    if (!c.alive || !c.extra.empty()) continue;
    bool real = false;
    for (auto [v, k] : c.members)
      if (!f.blocks[cfg.block_of[v]].synthetic) real = true;
    if (!real) c.alive = false;
  }

  std::vector<int> rpo = cfg.reverse_post_order();
  std::vector<int> pos(cfg.size(), 0);
  for (std::size_t i = 0; i < rpo.size(); ++i) pos[rpo[i]] = static_cast<int>(i);
  std::vector<int> order;
  for (std::size_t c = 0; c < classes.size(); ++c)
    if (classes[c].alive) order.push_back(static_cast<int>(c));
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    const Cls &x = classes[a], &y = classes[b];
    if (pos[x.place] != pos[y.place]) return pos[x.place] < pos[y.place];
    return x.trip < y.trip;
  });

  std::vector<int> index_of(classes.size(), -1);
  for (int c : order) {
    Cls& cls = classes[c];
    auto by_pos = [&](const auto& a, const auto& b) { return pos[a.first] < pos[b.first]; };
    std::sort(cls.members.begin(), cls.members.end(), by_pos);
    PostDomSet s;
    s.leader = cfg.labels[cls.leader];
    s.place = cfg.labels[cls.place];
    for (auto [v, k] : cls.members) s.members.push_back({cfg.labels[v], k});
    for (auto [v, k] : cls.extra) s.extra.push_back({cfg.labels[v], k});
    s.counter_index = static_cast<std::uint32_t>(plan.sets.size());
    if (cls.trip) {
      s.inc = IncKind::Trip;
      s.bound = cls.tc.bound;
      s.init = cls.tc.init;
      s.step = cls.tc.step;
    }
    index_of[c] = static_cast<int>(s.counter_index);
    plan.sets.push_back(std::move(s));
  }
  for (auto& p : pending) {
    p.h.counter_index = static_cast<std::uint32_t>(index_of[p.node >= 0 ? home[p.node] : p.cls]);
    plan.hoists.push_back(p.h);
  }

  for (const auto& s : plan.sets) {
    bool assigned = false;
    for (const auto& m : s.members) {
      if (!has_runtime_intrinsic(*f.find_block(m.label))) continue;
      if (!assigned) {
        ++plan.intrinsic_slots;
        assigned = true;
      }
      plan.intrinsic_slot[m.label] = plan.intrinsic_slots - 1;
    }
  }

  for (int v = 0; v < cfg.size(); ++v) {
    if (v == cfg.exit) continue;
    if (forest.irreducible[v])
      plan.notes.push_back({Severity::Note, "irreducible control flow at " + cfg.labels[v] + " in @" + f.name +
                                                "; block counted individually", 0, 0});
    else if (dom.covers(v) && !pd.tree.covers(v))
      plan.notes.push_back({Severity::Warning, "block " + cfg.labels[v] + " in @" + f.name +
                                                   " cannot reach the region exit (non-terminating)", 0, 0});
  }

  for (const auto& b : f.blocks)
    if (std::find(labels.begin(), labels.end(), b.label) != labels.end()) plan.blocks.push_back(b.label);
  return plan;
}

Module insert_instrumentation(const Module& normalized, const CounterPlan& plan) {
  Module out = normalized;

  auto apply = [](Function& f, const RegionPlan& rp) {
    for (const auto& [label, slot] : rp.intrinsic_slot) {
      Block& b = *f.find_block(label);
      std::vector<Instr> ins;
      for (auto& in : b.instrs) {
        if (is_intrinsic(in.op) && !in.args[0].is_imm) {
          if (in.op != Opcode::Memset) ins.push_back(Instr::make_isz_add(SizeArray::Load, slot, in.args[0]));
          ins.push_back(Instr::make_isz_add(SizeArray::Store, slot, in.args[0]));
        }
        ins.push_back(std::move(in));
      }
      b.instrs = std::move(ins);
    }
    for (const auto& s : rp.sets) {
      Block& b = *f.find_block(s.place);
      if (s.inc == IncKind::Trip) {
        b.instrs.insert(b.instrs.end() - 1, Instr::make_ctr_trip(s.counter_index, s.bound, s.init, s.step));
      } else {
        auto at = b.instrs.begin();
        if (at->op == Opcode::RoiBegin || at->op == Opcode::RoiEnter) ++at;
        b.instrs.insert(at, s.inc == IncKind::Constant ? Instr::make_ctr_add(s.counter_index, 1)
                                                      : Instr::make_ctr_inc(s.counter_index));
      }
    }
  };

  for (std::size_t r = 0; r < plan.rois.size(); ++r)
    if (!plan.rois[r].start.empty()) apply(*out.find_function(plan.rois[r].function), plan.regions[r]);
  for (const auto& [name, rp] : plan.clones) apply(*out.find_function(name), rp);

  for (auto& f : out.functions)
    for (auto& b : f.blocks)
      for (auto& in : b.instrs) {
        if (in.op == Opcode::RoiBegin) in.op = Opcode::RoiEnter;
        else if (in.op == Opcode::RoiEnd) in.op = Opcode::RoiExit;
      }

  out.banks.clear();
  for (std::size_t r = 0; r < plan.rois.size(); ++r) {
    const auto& d = plan.rois[r];
    BankDecl bank;
    bank.roi = d.name;
    bank.id = d.bank_id;
    bank.counters = d.bank_size;
    bank.isz_slots = d.intrinsic_slots;
    bank.period = d.period;
    bank.clones = plan.clone_ranges[r];
    out.banks.push_back(std::move(bank));
  }
  return out;
}

namespace {

EventTally set_tally(const Function& f, const PostDomSet& s) {
  EventTally t;
  for (const auto& m : s.members) t += tally_of(*f.find_block(m.label)).scaled(m.scale);
  for (const auto& m : s.extra) t += tally_of(*f.find_block(m.label)).scaled(m.scale);
  return t;
}

}  // namespace

StaticMix emit_static_mix(const Module& normalized, const CounterPlan& plan, std::uint64_t module_hash) {
  StaticMix mix;
  mix.module_hash = module_hash;
  for (std::size_t r = 0; r < plan.rois.size(); ++r) {
    const auto& d = plan.rois[r];
    RoiMix rm;
    rm.name = d.name;
    rm.bank_id = d.bank_id;
    rm.intrinsic_slots = d.intrinsic_slots;
    rm.period = d.period;
    rm.uncovered_indirect = plan.uncovered_indirect[r];
    rm.uncovered_extern = plan.uncovered_extern[r];
    const Function* f = normalized.find_function(d.function);
    for (const auto& s : plan.regions[r].sets) rm.counters.push_back(set_tally(*f, s));
    for (const auto& range : plan.clone_ranges[r]) {
      const Function* c = normalized.find_function(range.function);
      for (const auto& s : plan.clones.at(range.function).sets) rm.counters.push_back(set_tally(*c, s));
    }
    mix.rois.push_back(std::move(rm));
  }
  return mix;
}

InstrumentResult instrument_module(const Module& m, const InstrumentOptions& opts) {
  if (opts.period == 0) throw Error("sampling period must be at least 1");
  bool instrumented = !m.banks.empty();
  for (const auto& f : m.functions)
    for (const auto& b : f.blocks)
      for (const auto& in : b.instrs)
        if (is_instrumentation(in.op)) instrumented = true;
  if (instrumented) throw Error("module is already instrumented");

  InstrumentResult res;
  auto [baseline, rois] = find_rois(m);
  res.baseline = std::move(baseline);
  Module norm = res.baseline;
  CloneResult cr = clone_functions(norm, rois, opts.also_instrument);
  res.diagnostics = cr.diagnostics;

  CounterPlan& plan = res.plan;
  plan.clone_table = cr.clone_table;
  plan.uncovered_indirect = cr.uncovered_indirect;
  plan.uncovered_extern = cr.uncovered_extern;

  for (auto& d : rois) {
    RegionPlan rp;
    rp.function = d.function;
    if (!d.start.empty()) {
      Function& f = *norm.find_function(d.function);
      std::vector<int> idx;
      for (const auto& l : d.blocks) idx.push_back(f.block_index(l));
      rp = plan_region(f, idx, f.block_index(d.start), opts.plan);
      d.blocks = rp.blocks;
    }
    for (const auto& n : rp.notes) res.diagnostics.push_back(n);
    plan.regions.push_back(std::move(rp));
  }
  for (const auto& [orig, name] : plan.clone_table) {
    Function& f = *norm.find_function(name);
    std::vector<int> idx(f.blocks.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
    RegionPlan rp = plan_region(f, idx, 0, opts.plan);
    for (const auto& n : rp.notes) res.diagnostics.push_back(n);
    plan.clones[name] = std::move(rp);
  }

  for (std::size_t r = 0; r < rois.size(); ++r) {
    auto& d = rois[r];
    std::uint32_t ctr = plan.regions[r].counters();
    std::uint32_t isz = plan.regions[r].intrinsic_slots;
    std::vector<CloneRange> ranges;
    for (const auto& name : cr.reachable[r]) {
      ranges.push_back({name, ctr, isz});
      ctr += plan.clones[name].counters();
      isz += plan.clones[name].intrinsic_slots;
    }
    d.bank_size = ctr;
    d.intrinsic_slots = isz;
    d.period = opts.period;
    plan.clone_ranges.push_back(std::move(ranges));
  }
  plan.rois = std::move(rois);

  res.normalized = std::move(norm);
  res.instrumented = insert_instrumentation(res.normalized, plan);
  validate(res.instrumented);
  res.mix = emit_static_mix(res.normalized, plan, module_hash(res.instrumented));
  return res;
}

std::string describe_plan(const CounterPlan& plan) {
  std::ostringstream os;
  auto region = [&](const RegionPlan& rp, const std::string& indent) {
    for (const auto& s : rp.sets) {
      os << indent << "ctr " << s.counter_index << " leader " << s.leader << " at " << s.place;
      if (s.inc == IncKind::Trip) os << " += trip(" << s.bound << ", " << s.init << ", " << s.step << ")";
      os << " members";
      for (const auto& m : s.members) os << " " << m.label << "x" << m.scale;
      for (const auto& m : s.extra) os << " +" << m.label << "x" << m.scale;
      os << "\n";
    }
    for (const auto& h : rp.hoists) {
      os << indent << "hoist " << h.header << " to " << h.preheader << " ctr " << h.counter_index;
      if (h.kind == TripCount::Kind::Constant) os << " trips " << h.trips << "\n";
      else os << " trips " << h.bound << "\n";
    }
    for (const auto& [label, slot] : rp.intrinsic_slot) os << indent << "isz " << slot << " " << label << "\n";
  };
  for (std::size_t r = 0; r < plan.rois.size(); ++r) {
    const auto& d = plan.rois[r];
    os << "roi " << d.name << " in @" << d.function << " bank " << d.bank_id << " counters " << d.bank_size
       << " intrinsic_slots " << d.intrinsic_slots << "\n";
    region(plan.regions[r], "  ");
    for (const auto& c : plan.clone_ranges[r])
      os << "  clone @" << c.function << " ctr_base " << c.ctr_base << " isz_base " << c.isz_base << "\n";
  }
  for (const auto& [name, rp] : plan.clones) {
    os << "clone @" << name << "\n";
    region(rp, "  ");
  }
  return os.str();
}

}  // namespace memroi
