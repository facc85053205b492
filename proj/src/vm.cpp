#include "memroi/vm.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <set>

#include "memroi/mixfile.hpp"

namespace memroi {

namespace {

[[noreturn]] void run_error(const std::string& msg) { throw Error("run error: " + msg); }

std::int64_t parse_i64(std::string_view s, std::string_view what) {
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty())
    throw Error("invalid " + std::string(what) + " '" + std::string(s) + "'");
  return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  while (true) {
    auto i = s.find(sep);
    out.push_back(s.substr(0, i));
    if (i == std::string_view::npos) break;
    s.remove_prefix(i + 1);
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

}  // namespace

CostModel parse_cost_model(std::string_view spec) {
  CostModel c;
  spec = trim(spec);
  if (spec.empty() || spec == "default") return c;
  for (auto item : split(spec, ',')) {
    item = trim(item);
    if (item == "default") continue;
    auto eq = item.find('=');
    if (eq == std::string_view::npos) throw Error("cost override '" + std::string(item) + "' needs key=value");
    std::string key(trim(item.substr(0, eq)));
    const std::int64_t v = parse_i64(trim(item.substr(eq + 1)), "cost value");
    if (v < 0) throw Error("cost value for " + key + " must be non-negative");
    const auto u = static_cast<std::uint64_t>(v);
    static const std::map<std::string, std::uint64_t CostModel::*> fields = {
        {"int_op", &CostModel::int_op},         {"fp_op", &CostModel::fp_op},
        {"mem_op", &CostModel::mem_op},         {"branch", &CostModel::branch},
        {"jump", &CostModel::jump},             {"call", &CostModel::call},
        {"ret", &CostModel::ret},               {"ctr_inc", &CostModel::ctr_inc},
        {"timer_read", &CostModel::timer_read}, {"hwctr_read", &CostModel::hwctr_read},
        {"intrinsic_word", &CostModel::intrinsic_word}, {"roi_gate", &CostModel::roi_gate},
        {"ctr_gate", &CostModel::ctr_gate},     {"observer", &CostModel::observer}};
    if (auto it = fields.find(key); it != fields.end()) {
      if (u == 0 && key != "observer" && key != "roi_gate" && key != "ctr_gate")
        throw Error("cost for " + key + " must be positive");
      c.*(it->second) = u;
    } else if (key == "hw") {
      c.hw_counters = u != 0;
    } else if (key == "hw_reads") {
      c.hw_reads = static_cast<std::uint32_t>(u);
    } else {
      throw Error("unknown cost key '" + key + "'");
    }
  }
  return c;
}

std::vector<ThreadSpec> parse_thread_specs(std::string_view spec) {
  std::vector<ThreadSpec> out;
  spec = trim(spec);
  if (spec.empty()) return out;
  for (auto part : split(spec, ';')) {
    part = trim(part);
    if (part.empty()) continue;
    ThreadSpec t;
    auto colon = part.find(':');
    std::string_view name = trim(part.substr(0, colon));
    if (!name.empty() && name.front() == '@') name.remove_prefix(1);
    t.entry = std::string(name);
    if (colon != std::string_view::npos) {
      auto args = trim(part.substr(colon + 1));
      if (!args.empty())
        for (auto a : split(args, ',')) t.input.push_back(parse_i64(trim(a), "thread input"));
    }
    out.push_back(std::move(t));
  }
  return out;
}

namespace {

struct LOp {
  bool imm = true;
  std::int64_t value = 0;
  int slot = -1;
};

struct LInstr {
  Opcode op = Opcode::Fop;
  int dst = -1;
  LOp a, b;
  std::vector<LOp> args;
  int callee = -1;  // function index; -1 extern
  std::vector<int> table;
  int t1 = -1, t2 = -1;
  int roi = -1;
  std::uint32_t index = 0;
  IncKind inc = IncKind::One;
  std::int64_t init = 0, step = 1;
  SizeArray array = SizeArray::Load;
  EventTally tally;
  std::uint64_t cost = 0;
};

struct LBlock {
  std::vector<LInstr> code;
  bool synthetic = false;
  int gid = 0;  // module-wide block id
  int starts_roi = -1;
};

struct LFunc {
  std::string name;
  int nregs = 0;
  std::vector<int> params;
  std::vector<LBlock> blocks;
  bool clone = false;
  std::vector<int> ctr_base, isz_base;  // per ROI id, -1 when the bank has no range
};

struct Program {
  std::vector<LFunc> funcs;
  std::vector<std::string> rois;
  std::vector<const BankDecl*> banks;  // per ROI id, nullptr when not instrumented
  std::vector<std::pair<std::string, std::string>> block_names;  // by gid
  bool instrumented = false;
  int entry = -1;
};

Program lower(const Module& m, const CostModel& c) {
  Program p;
  std::set<std::string> roi_names;
  for (const auto& f : m.functions)
    for (const auto& b : f.blocks)
      for (const auto& in : b.instrs) {
        if (!in.roi.empty()) roi_names.insert(in.roi);
        if (is_instrumentation(in.op)) p.instrumented = true;
      }
  for (const auto& b : m.banks) roi_names.insert(b.roi);
  p.rois.assign(roi_names.begin(), roi_names.end());
  auto roi_id = [&](const std::string& n) {
    return static_cast<int>(std::lower_bound(p.rois.begin(), p.rois.end(), n) - p.rois.begin());
  };
  p.banks.assign(p.rois.size(), nullptr);
  for (const auto& b : m.banks) p.banks[roi_id(b.roi)] = &b;

  std::map<std::string, int> fidx;
  for (std::size_t i = 0; i < m.functions.size(); ++i) fidx[m.functions[i].name] = static_cast<int>(i);
  if (const Function* e = m.entry_function()) p.entry = fidx[e->name];

  for (const auto& f : m.functions) {
    LFunc lf;
    lf.name = f.name;
    lf.clone = f.is_clone;
    std::map<std::string, int> regs;
    auto reg = [&](const std::string& r) {
      auto [it, fresh] = regs.emplace(r, static_cast<int>(regs.size()));
      return it->second;
    };
    for (const auto& prm : f.params) lf.params.push_back(reg(prm));
    auto op = [&](const Operand& o) {
      LOp l;
      l.imm = o.is_imm;
      l.value = o.imm;
      if (!o.is_imm) l.slot = reg(o.reg);
      return l;
    };
    std::map<std::string, int> bidx;
    for (std::size_t i = 0; i < f.blocks.size(); ++i) bidx[f.blocks[i].label] = static_cast<int>(i);
    for (const auto& b : f.blocks) {
      LBlock lb;
      lb.synthetic = b.synthetic;
      lb.gid = static_cast<int>(p.block_names.size());
      p.block_names.push_back({f.name, b.label});
      if (!b.instrs.empty() && (b.instrs[0].op == Opcode::RoiBegin || b.instrs[0].op == Opcode::RoiEnter))
        lb.starts_roi = roi_id(b.instrs[0].roi);
      for (const auto& in : b.instrs) {
        LInstr li;
        li.op = in.op;
        if (!in.dst.empty()) li.dst = reg(in.dst);
        if (in.args.size() > 0) li.a = op(in.args[0]);
        if (in.args.size() > 1) li.b = op(in.args[1]);
        for (const auto& a : in.call_args) li.args.push_back(op(a));
        if (in.op == Opcode::Call) {
          auto it = fidx.find(in.callee);
          li.callee = it == fidx.end() ? -1 : it->second;
        }
        for (const auto& t : in.table) li.table.push_back(fidx.at(t));
        if (!in.target.empty()) li.t1 = bidx.at(in.target);
        if (!in.alt.empty()) li.t2 = bidx.at(in.alt);
        if (!in.roi.empty()) li.roi = roi_id(in.roi);
        li.index = in.index;
        li.inc = in.inc;
        li.init = in.trip_init;
        li.step = in.trip_step;
        li.array = in.array;
        if (!b.synthetic) li.tally = tally_of(in);
        switch (in.op) {
          case Opcode::Const:
          case Opcode::Add:
          case Opcode::Sub:
          case Opcode::Mul:
          case Opcode::CmpLt: li.cost = c.int_op; break;
          case Opcode::Fop: li.cost = c.fp_op; break;
          case Opcode::Load:
          case Opcode::Store: li.cost = c.mem_op; break;
          case Opcode::Call:
          case Opcode::ICall: li.cost = c.call; break;
          case Opcode::Br: li.cost = c.branch; break;
          case Opcode::Jmp: li.cost = c.jump; break;
          case Opcode::Ret: li.cost = c.ret; break;
          default: break;
        }
        lb.code.push_back(std::move(li));
      }
      lf.blocks.push_back(std::move(lb));
    }
    lf.nregs = static_cast<int>(regs.size());
    lf.ctr_base.assign(p.rois.size(), -1);
    lf.isz_base.assign(p.rois.size(), -1);
    for (std::size_t r = 0; r < p.rois.size(); ++r)
      if (p.banks[r])
        if (const CloneRange* cr = p.banks[r]->find_clone(f.name)) {
          lf.ctr_base[r] = static_cast<int>(cr->ctr_base);
          lf.isz_base[r] = static_cast<int>(cr->isz_base);
        }
    p.funcs.push_back(std::move(lf));
  }
  return p;
}

struct Frame {
  int fn = 0;
  int block = 0;
  std::size_t ip = 0;
  std::vector<std::int64_t> regs;
  int ret_dst = -1;
};

struct Thread {
  std::uint32_t id = 0;
  std::vector<Frame> stack;
  std::uint64_t clock = 0;
  bool done = false;
  std::int64_t exit_code = 0;
  int active = -1;
  int depth = 0;
  bool enabled = false;
  std::uint64_t start = 0;
  std::vector<BankState> banks;  // per ROI id
  // Oracle state.
  std::vector<EventTally> events;
  std::vector<std::uint64_t> roi_cycles, roi_hits;
  std::vector<std::vector<std::uint64_t>> block_counts;  // [roi][gid]
};

std::uint64_t wrap_add(std::uint64_t a, std::uint64_t b) { return a + b; }

class Machine {
 public:
  Machine(const Module& m, const RunOptions& opts, bool oracle)
      : m_(m), opts_(opts), oracle_(oracle), prog_(lower(m, opts.cost)) {
    if (oracle_ && prog_.instrumented) throw Error("the oracle expects an uninstrumented module");
    std::vector<ThreadSpec> specs = opts.threads;
    if (specs.empty()) specs.push_back({});
    for (std::size_t i = 0; i < specs.size(); ++i) {
      Thread t;
      t.id = static_cast<std::uint32_t>(i);
      int fn = prog_.entry;
      if (!specs[i].entry.empty()) {
        fn = -1;
        for (std::size_t j = 0; j < prog_.funcs.size(); ++j)
          if (prog_.funcs[j].name == specs[i].entry) fn = static_cast<int>(j);
        if (fn < 0) throw Error("entry function @" + specs[i].entry + " is not defined");
      }
      if (fn < 0) throw Error("module has no entry function (mark one 'entry' or define @main)");
      const LFunc& f = prog_.funcs[fn];
      Frame fr;
      fr.fn = fn;
      fr.regs.assign(f.nregs, 0);
      for (std::size_t k = 0; k < f.params.size() && k < specs[i].input.size(); ++k)
        fr.regs[f.params[k]] = specs[i].input[k];
      const std::size_t nroi = prog_.rois.size();
      t.banks.resize(nroi);
      for (std::size_t r = 0; r < nroi; ++r) {
        t.banks[r].roi = prog_.rois[r];
        if (const BankDecl* b = prog_.banks[r]) {
          t.banks[r].counters.assign(b->counters, 0);
          t.banks[r].isz_load.assign(b->isz_slots, 0);
          t.banks[r].isz_store.assign(b->isz_slots, 0);
        }
      }
      if (oracle_) {
        t.events.resize(nroi);
        t.roi_cycles.assign(nroi, 0);
        t.roi_hits.assign(nroi, 0);
        t.block_counts.assign(nroi, std::vector<std::uint64_t>(prog_.block_names.size(), 0));
      }
      t.stack.push_back(std::move(fr));
      threads_.push_back(std::move(t));
      enter_block(threads_.back(), 0);
    }
  }

  void execute() {
    const bool monitored = opts_.sink && !oracle_;
    std::uint64_t period = 0, next = 0;
    if (monitored) {
      period = opts_.sink->begin(handshake());
      next = period;
    }
    bool any = true;
    while (any) {
      any = false;
      for (auto& t : threads_) {
        if (t.done) continue;
        any = true;
        step(t);
        if (monitored && period > 0) {
          const std::uint64_t now = vtime();
          if (now >= next) {
            emit(now, false);
            for (auto& u : threads_)
              if (!u.done) charge_instr(u, opts_.cost.observer);
            next = (now / period + 1) * period;
          }
        }
      }
    }
    if (monitored) emit(vtime(), true);
  }

  RunArtifacts artifacts() const {
    RunArtifacts a;
    a.dump.module_hash = module_hash(m_);
    for (const auto& t : threads_) {
      a.exit_codes.push_back(t.exit_code);
      a.thread_cycles.push_back(t.clock);
      a.total_cycles += t.clock;
      a.dump.threads.push_back(thread_banks(t));
    }
    a.instrumentation_cycles = instr_cycles_;
    a.steps = steps_;
    return a;
  }

  ExactProfile profile() const {
    ExactProfile p;
    p.rois = prog_.rois;
    for (const auto& t : threads_) {
      ThreadTrace tt;
      tt.cycles = t.clock;
      tt.exit_code = t.exit_code;
      p.total_cycles += t.clock;
      for (std::size_t r = 0; r < prog_.rois.size(); ++r) {
        RoiTrace rt;
        rt.events = t.events[r];
        rt.hits = t.roi_hits[r];
        rt.cycles = t.roi_cycles[r];
        for (std::size_t g = 0; g < prog_.block_names.size(); ++g)
          if (t.block_counts[r][g]) rt.blocks[prog_.block_names[g]] = t.block_counts[r][g];
        tt.rois[prog_.rois[r]] = std::move(rt);
      }
      p.threads.push_back(std::move(tt));
    }
    return p;
  }

 private:
  std::uint64_t vtime() const {
    std::uint64_t s = 0;
    for (const auto& t : threads_) s += t.clock;
    return s;
  }

  ThreadBanks thread_banks(const Thread& t) const {
    ThreadBanks tb;
    tb.thread = t.id;
    std::vector<std::pair<std::uint32_t, std::size_t>> order;
    for (std::size_t r = 0; r < prog_.rois.size(); ++r)
      if (prog_.banks[r]) order.push_back({prog_.banks[r]->id, r});
    std::sort(order.begin(), order.end());
    for (auto [id, r] : order) tb.banks.push_back(t.banks[r]);
    return tb;
  }

  Handshake handshake() const {
    Handshake h;
    h.module_hash = module_hash(m_);
    for (const auto& t : threads_) {
      ThreadDescriptor td;
      td.thread = t.id;
      for (const auto& b : thread_banks(t).banks) {
        const BankDecl* d = m_.find_bank(b.roi);
        td.rois.push_back({b.roi, d->counters, d->isz_slots, d->period});
      }
      h.threads.push_back(std::move(td));
    }
    return h;
  }

  void emit(std::uint64_t now, bool final) {
    Snapshot s;
    s.id = snap_id_++;
    s.vtime = now;
    s.final = final;
    for (const auto& t : threads_) s.threads.push_back(thread_banks(t));
    opts_.sink->snapshot(s);
  }

  void charge(Thread& t, std::uint64_t c) {
    t.clock += c;
    if (oracle_ && t.active >= 0) t.roi_cycles[t.active] += c;
  }
  void charge_instr(Thread& t, std::uint64_t c) {
    t.clock += c;
    instr_cycles_ += c;
  }

  void enter_block(Thread& t, int block) {
    Frame& fr = t.stack.back();
    fr.block = block;
    fr.ip = 0;
    if (!oracle_) return;
    const LBlock& b = prog_.funcs[fr.fn].blocks[block];
    int r = t.active;
    if (r < 0 && b.starts_roi >= 0) r = b.starts_roi;
    if (r >= 0) ++t.block_counts[r][b.gid];
  }

  std::int64_t val(const Frame& fr, const LOp& o) const { return o.imm ? o.value : fr.regs[o.slot]; }

  BankState* active_bank(Thread& t) {
    if (t.active < 0 || !prog_.banks[t.active]) return nullptr;
    return &t.banks[t.active];
  }

  void bump(BankState& b, std::vector<std::uint64_t>& arr, std::size_t idx, std::uint64_t amount) {
    if (idx >= arr.size()) run_error("counter index " + std::to_string(idx) + " out of range for ROI " + b.roi);
    if (amount > UINT64_MAX - arr[idx]) {
      arr[idx] = UINT64_MAX;
      b.saturated = true;
    } else {
      arr[idx] += amount;
    }
  }

  // Executes the current block of `t` up to and including its next control transfer.
  void step(Thread& t) {
    const CostModel& c = opts_.cost;
    while (true) {
      Frame& fr = t.stack.back();
      const LFunc& fn = prog_.funcs[fr.fn];
      const LBlock& blk = fn.blocks[fr.block];
      const LInstr& in = blk.code[fr.ip];
      if (++steps_ > opts_.step_limit)
        run_error("step limit of " + std::to_string(opts_.step_limit) + " exceeded (possible non-termination)");
      if (oracle_ && t.active >= 0 && !is_intrinsic(in.op)) t.events[t.active] += in.tally;
      auto program_cost = [&](std::uint64_t cost) {
        if (blk.synthetic) charge_instr(t, cost);
        else charge(t, cost);
      };
      switch (in.op) {
        case Opcode::Const:
          fr.regs[in.dst] = in.a.value;
          program_cost(in.cost);
          break;
        case Opcode::Add:
        case Opcode::Sub:
        case Opcode::Mul:
        case Opcode::CmpLt: {
          const auto x = static_cast<std::uint64_t>(val(fr, in.a));
          const auto y = static_cast<std::uint64_t>(val(fr, in.b));
          std::uint64_t r = 0;
          if (in.op == Opcode::Add) r = wrap_add(x, y);
          else if (in.op == Opcode::Sub) r = x - y;
          else if (in.op == Opcode::Mul) r = x * y;
          else r = val(fr, in.a) < val(fr, in.b) ? 1 : 0;
          fr.regs[in.dst] = static_cast<std::int64_t>(r);
          program_cost(in.cost);
          break;
        }
        case Opcode::Fop:
        case Opcode::Store: program_cost(in.cost); break;
        case Opcode::Load:
          fr.regs[in.dst] = 0;
          program_cost(in.cost);
          break;
        case Opcode::Memcpy:
        case Opcode::Memmove:
        case Opcode::Memset: {
          const std::int64_t len = val(fr, in.a);
          if (len < 0) run_error("negative intrinsic length " + std::to_string(len) + " in @" + fn.name);
          const auto bytes = static_cast<std::uint64_t>(len);
          if (oracle_ && t.active >= 0) {
            EventTally e = in.tally;
            if (!in.a.imm) add_intrinsic_bytes(e, in.op, bytes);
            t.events[t.active] += e;
          }
          program_cost(saturating_mul(c.intrinsic_word, intrinsic_ops(bytes)));
          break;
        }
        case Opcode::Call:
        case Opcode::ICall: {
          program_cost(in.cost);
          int callee = in.callee;
          if (in.op == Opcode::ICall) {
            const auto k = static_cast<std::int64_t>(in.table.size());
            callee = in.table[static_cast<std::size_t>(((val(fr, in.a) % k) + k) % k)];
          }
          if (callee < 0) {
            if (in.dst >= 0) fr.regs[in.dst] = 0;
            break;
          }
          const LFunc& cf = prog_.funcs[callee];
          Frame nf;
          nf.fn = callee;
          nf.regs.assign(cf.nregs, 0);
          for (std::size_t k = 0; k < cf.params.size() && k < in.args.size(); ++k)
            nf.regs[cf.params[k]] = val(fr, in.args[k]);
          nf.ret_dst = in.dst;
          t.stack.push_back(std::move(nf));
          enter_block(t, 0);
          return;
        }
        case Opcode::Br:
          program_cost(in.cost);
          enter_block(t, val(fr, in.a) != 0 ? in.t1 : in.t2);
          return;
        case Opcode::Jmp:
          program_cost(in.cost);
          enter_block(t, in.t1);
          return;
        case Opcode::Ret: {
          program_cost(in.cost);
          const std::int64_t v = val(fr, in.a);
          const int dst = fr.ret_dst;
          t.stack.pop_back();
          if (t.stack.empty()) {
            t.done = true;
            t.exit_code = v;
            if (t.active >= 0 && !oracle_) run_error("thread ended inside ROI " + prog_.rois[t.active]);
            return;
          }
          Frame& caller = t.stack.back();
          if (dst >= 0) caller.regs[dst] = v;
          ++caller.ip;
          return;
        }
        case Opcode::RoiBegin:
          if (t.active >= 0) {
            ++t.depth;
          } else {
            t.active = in.roi;
            t.depth = 1;
            if (oracle_) ++t.roi_hits[in.roi];
          }
          break;
        case Opcode::RoiEnd:
          if (t.depth > 1) {
            --t.depth;
          } else if (t.active == in.roi) {
            t.active = -1;
            t.depth = 0;
          }
          break;
        case Opcode::RoiEnter: roi_enter(t, in.roi); break;
        case Opcode::RoiExit: roi_exit(t, in.roi); break;
        case Opcode::CtrInc:
        case Opcode::IszAdd: counter_op(t, fr, fn, in); break;
      }
      ++fr.ip;
    }
  }

  void roi_enter(Thread& t, int r) {
    const CostModel& c = opts_.cost;
    charge_instr(t, c.roi_gate);
    if (t.active >= 0) {
      ++t.depth;
      return;
    }
    t.active = r;
    t.depth = 1;
    BankState& b = t.banks[r];
    const std::uint64_t period = prog_.banks[r] ? prog_.banks[r]->period : 1;
    const std::uint64_t prior = b.hits++;
    t.enabled = prior % period == 0;
    if (!t.enabled) return;
    ++b.enabled_execs;
    if (c.hw_counters) charge_instr(t, saturating_mul(c.hwctr_read, c.hw_reads));
    charge_instr(t, c.timer_read);
    t.start = t.clock;
  }

  void roi_exit(Thread& t, int r) {
    const CostModel& c = opts_.cost;
    if (t.depth > 1) {
      --t.depth;
      charge_instr(t, c.roi_gate);
      return;
    }
    if (t.active == r && t.enabled) {
      BankState& b = t.banks[r];
      b.time = saturating_add(b.time, t.clock - t.start);
      charge_instr(t, c.timer_read);
      if (c.hw_counters) charge_instr(t, saturating_mul(c.hwctr_read, c.hw_reads));
    }
    charge_instr(t, c.roi_gate);
    if (t.active == r) {
      t.active = -1;
      t.depth = 0;
      t.enabled = false;
    }
  }

  void counter_op(Thread& t, const Frame& fr, const LFunc& fn, const LInstr& in) {
    const CostModel& c = opts_.cost;
    BankState* b = active_bank(t);
    if (!b || !t.enabled) {
      charge_instr(t, c.ctr_gate);
      return;
    }
    charge_instr(t, c.ctr_inc);
    std::size_t base = 0;
    if (fn.clone) {
      const int cb = in.op == Opcode::CtrInc ? fn.ctr_base[t.active] : fn.isz_base[t.active];
      if (cb < 0) return;
      base = static_cast<std::size_t>(cb);
    }
    ++b->incr;
    if (in.op == Opcode::CtrInc) {
      std::uint64_t amount = 1;
      if (in.inc == IncKind::Constant) {
        amount = static_cast<std::uint64_t>(in.a.value);
      } else if (in.inc == IncKind::Trip) {
        const std::int64_t bound = val(fr, in.a);
        amount = 0;
        if (bound > in.init) {
          const std::uint64_t span = static_cast<std::uint64_t>(bound) - static_cast<std::uint64_t>(in.init);
          const auto step = static_cast<std::uint64_t>(in.step);
          amount = span / step + (span % step != 0);
        }
      }
      bump(*b, b->counters, base + in.index, amount);
    } else {
      const std::int64_t len = val(fr, in.a);
      if (len < 0) run_error("negative intrinsic length " + std::to_string(len) + " in @" + fn.name);
      auto& arr = in.array == SizeArray::Load ? b->isz_load : b->isz_store;
      bump(*b, arr, base + in.index, static_cast<std::uint64_t>(len));
    }
  }

  const Module& m_;
  const RunOptions& opts_;
  bool oracle_;
  Program prog_;
  std::vector<Thread> threads_;
  std::uint64_t steps_ = 0;
  std::uint64_t instr_cycles_ = 0;
  std::uint64_t snap_id_ = 0;
};

}  // namespace

RunArtifacts run(const Module& m, const RunOptions& opts) {
  Machine vm(m, opts, false);
  vm.execute();
  return vm.artifacts();
}

ExactProfile run_oracle(const Module& m, const RunOptions& opts) {
  RunOptions o = opts;
  o.sink = nullptr;
  Machine vm(m, o, true);
  vm.execute();
  return vm.profile();
}

}  // namespace memroi
