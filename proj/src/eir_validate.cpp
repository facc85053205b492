#include <cctype>
#include <deque>
#include <map>
#include <set>

#include "memroi/eir.hpp"

namespace memroi {
namespace {

struct Checker {
  const Module& m;
  std::vector<Diagnostic> diags;

  void error(std::string msg) { diags.push_back({Severity::Error, std::move(msg), 0, 0}); }

  static std::string where(const Function& f, const Block& b) {
    return " (in @" + f.name + ", block " + b.label + ")";
  }

  void check_structure(const Function& f) {
    std::set<std::string> labels;
    for (const auto& b : f.blocks) {
      if (!labels.insert(b.label).second) error("duplicate label " + b.label + " in @" + f.name);
      if (b.instrs.empty() || !b.instrs.back().is_terminator()) {
        error("block does not end with a terminator" + where(f, b));
        continue;
      }
      for (std::size_t i = 0; i + 1 < b.instrs.size(); ++i)
        if (b.instrs[i].is_terminator()) error("terminator in the middle of a block" + where(f, b));
    }
    for (const auto& b : f.blocks) {
      if (b.instrs.empty()) continue;
      for (const auto& s : b.successors())
        if (!labels.count(s)) error("unresolved target " + s + where(f, b));
    }
    if (!f.blocks.empty()) {
      const std::string& entry = f.blocks.front().label;
      for (const auto& b : f.blocks)
        for (const auto& s : b.successors())
          if (s == entry) error("entry block " + entry + " of @" + f.name + " has a predecessor");
    }
  }

  void check_calls(const Function& f) {
    for (const auto& b : f.blocks) {
      for (const auto& in : b.instrs) {
        if (in.op == Opcode::Call) {
          if (const Function* callee = m.find_function(in.callee)) {
            if (callee->params.size() != in.call_args.size())
              error("call to @" + in.callee + " passes " + std::to_string(in.call_args.size()) +
                    " arguments, expected " + std::to_string(callee->params.size()) + where(f, b));
          } else if (!m.is_extern(in.callee)) {
            error("call to undefined function @" + in.callee + where(f, b));
          }
        } else if (in.op == Opcode::ICall) {
          if (in.table.empty()) error("icall table empty" + where(f, b));
          for (const auto& t : in.table) {
            const Function* callee = m.find_function(t);
            if (!callee) {
              error("icall table entry @" + t + " is not a defined function" + where(f, b));
            } else if (callee->params.size() != in.call_args.size()) {
              error("icall passes " + std::to_string(in.call_args.size()) +
                    " arguments but @" + t + " takes " + std::to_string(callee->params.size()) +
                    where(f, b));
            }
          }
        } else if (is_intrinsic(in.op) && in.args[0].is_imm && in.args[0].imm < 0) {
          error("intrinsic length must be non-negative" + where(f, b));
        }
      }
    }
  }

  static void uses(const Instr& in, std::vector<const std::string*>& out) {
    out.clear();
    for (const auto& a : in.args)
      if (!a.is_imm) out.push_back(&a.reg);
    for (const auto& a : in.call_args)
      if (!a.is_imm) out.push_back(&a.reg);
  }

  // Must-defined register sets, intersected over predecessors.
  void check_registers(const Function& f) {
    const std::size_t n = f.blocks.size();
    std::map<std::string, int> index;
    for (std::size_t i = 0; i < n; ++i) index[f.blocks[i].label] = static_cast<int>(i);
    std::vector<std::vector<int>> preds(n);
    for (std::size_t i = 0; i < n; ++i)
      for (const auto& s : f.blocks[i].successors())
        if (auto it = index.find(s); it != index.end()) preds[it->second].push_back(static_cast<int>(i));

    std::set<std::string> all;
    for (const auto& p : f.params) all.insert(p);
    for (const auto& b : f.blocks)
      for (const auto& in : b.instrs)
        if (!in.dst.empty()) all.insert(in.dst);

    auto transfer = [&](std::size_t bi, std::set<std::string> s) {
      for (const auto& in : f.blocks[bi].instrs)
        if (!in.dst.empty()) s.insert(in.dst);
      return s;
    };

    std::vector<bool> reachable(n, false);
    std::deque<int> work{0};
    reachable[0] = true;
    while (!work.empty()) {
      int b = work.front();
      work.pop_front();
      for (const auto& s : f.blocks[b].successors())
        if (auto it = index.find(s); it != index.end() && !reachable[it->second]) {
          reachable[it->second] = true;
          work.push_back(it->second);
        }
    }

    std::vector<std::set<std::string>> in_sets(n, all), out_sets(n, all);
    in_sets[0] = std::set<std::string>(f.params.begin(), f.params.end());
    bool changed = true;
    while (changed) {
      changed = false;
      for (std::size_t i = 0; i < n; ++i) {
        if (!reachable[i]) continue;
        std::set<std::string> in;
        if (i == 0) {
          in = std::set<std::string>(f.params.begin(), f.params.end());
        } else {
          bool first = true;
          for (int p : preds[i]) {
            if (!reachable[p]) continue;
            if (first) {
              in = out_sets[p];
              first = false;
            } else {
              std::set<std::string> meet;
              for (const auto& r : in)
                if (out_sets[p].count(r)) meet.insert(r);
              in = std::move(meet);
            }
          }
        }
        auto out = transfer(i, in);
        if (in != in_sets[i] || out != out_sets[i]) {
          in_sets[i] = std::move(in);
          out_sets[i] = std::move(out);
          changed = true;
        }
      }
    }

    std::vector<const std::string*> used;
    for (std::size_t i = 0; i < n; ++i) {
      if (!reachable[i]) continue;
      std::set<std::string> live = in_sets[i];
      for (const auto& in : f.blocks[i].instrs) {
        uses(in, used);
        for (const auto* r : used)
          if (!live.count(*r))
            error("register " + *r + " used before assignment" + where(f, f.blocks[i]));
        if (!in.dst.empty()) live.insert(in.dst);
      }
    }
  }

  void check_markers() {
    std::map<std::string, std::vector<std::string>> begins, ends;  // roi -> functions
    for (const auto& f : m.functions) {
      for (const auto& b : f.blocks) {
        for (const auto& in : b.instrs) {
          if (in.op == Opcode::RoiBegin || in.op == Opcode::RoiEnter) begins[in.roi].push_back(f.name);
          if (in.op == Opcode::RoiEnd || in.op == Opcode::RoiExit) ends[in.roi].push_back(f.name);
        }
      }
    }
    for (const auto& [name, fns] : begins) {
      bool ok = !name.empty();
      for (char c : name)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '.' && c != '-') ok = false;
      if (!ok) error("ROI name \"" + name + "\" must be non-empty and use only [A-Za-z0-9_.-]");
      if (fns.size() > 1) error("ROI \"" + name + "\" has more than one begin marker");
      auto it = ends.find(name);
      if (it == ends.end()) {
        error("unmatched ROI marker: \"" + name + "\" has no end");
      } else if (it->second.size() == 1 && it->second.front() != fns.front()) {
        error("ROI \"" + name + "\" begins in @" + fns.front() + " but ends in @" +
              it->second.front());
      }
    }
    for (const auto& [name, fns] : ends) {
      if (fns.size() > 1) error("ROI \"" + name + "\" has more than one end marker");
      if (!begins.count(name)) error("unmatched ROI marker: \"" + name + "\" has no begin");
    }
  }

  void check_instrumentation(const Function& f,
                             const std::vector<std::optional<std::string>>& states) {
    for (std::size_t bi = 0; bi < f.blocks.size(); ++bi) {
      const Block& b = f.blocks[bi];
      std::string state = states[bi].value_or("");
      for (const auto& in : b.instrs) {
        if (in.op == Opcode::RoiBegin || in.op == Opcode::RoiEnter) state = in.roi;
        if (in.op == Opcode::RoiEnd || in.op == Opcode::RoiExit) state.clear();
        if (in.op == Opcode::RoiEnter || in.op == Opcode::RoiExit) {
          if (!m.find_bank(in.roi)) error("no counter bank declared for ROI \"" + in.roi + "\"");
        }
        if (in.op != Opcode::CtrInc && in.op != Opcode::IszAdd) continue;
        const bool ctr = in.op == Opcode::CtrInc;
        if (f.is_clone) {
          for (const auto& bank : m.banks) {
            const CloneRange* r = bank.find_clone(f.name);
            if (!r) continue;
            std::uint64_t idx = (ctr ? r->ctr_base : r->isz_base) + std::uint64_t{in.index};
            if (idx >= (ctr ? bank.counters : bank.isz_slots))
              error(std::string(opcode_name(in.op)) + " index out of range for bank \"" +
                    bank.roi + "\"" + where(f, b));
          }
          continue;
        }
        const BankDecl* bank = state.empty() ? nullptr : m.find_bank(state);
        if (!bank) {
          if (states[bi]) error(std::string(opcode_name(in.op)) + " outside any ROI" + where(f, b));
          continue;
        }
        if (in.index >= (ctr ? bank->counters : bank->isz_slots))
          error(std::string(opcode_name(in.op)) + " index out of range for bank \"" + bank->roi +
                "\"" + where(f, b));
      }
    }
  }

  void run() {
    std::set<std::string> names;
    int entries = 0;
    for (const auto& f : m.functions) {
      if (!names.insert(f.name).second) error("duplicate function @" + f.name);
      if (m.is_extern(f.name)) error("@" + f.name + " is both defined and extern");
      if (f.is_entry) ++entries;
      if (f.blocks.empty()) error("function @" + f.name + " has no blocks");
    }
    if (entries > 1) error("more than one function marked entry");
    std::set<std::string> banks;
    for (const auto& b : m.banks)
      if (!banks.insert(b.roi).second) error("duplicate bank for ROI \"" + b.roi + "\"");

    for (const auto& f : m.functions) {
      if (f.blocks.empty()) continue;
      std::size_t before = diags.size();
      check_structure(f);
      if (diags.size() != before) continue;
      check_calls(f);
      check_registers(f);
      try {
        auto states = roi_entry_states(f);
        check_instrumentation(f, states);
      } catch (const Error& e) {
        for (const auto& d : e.diagnostics()) diags.push_back(d);
      }
    }
    check_markers();
  }
};

}  // namespace

std::vector<std::optional<std::string>> roi_entry_states(const Function& f) {
  const std::size_t n = f.blocks.size();
  std::map<std::string, int> index;
  for (std::size_t i = 0; i < n; ++i) index[f.blocks[i].label] = static_cast<int>(i);
  std::vector<std::optional<std::string>> state(n);
  if (n == 0) return state;

  auto fail = [&](const std::string& msg, const Block& b) {
    throw Error(Diagnostic{Severity::Error, msg + " (in @" + f.name + ", block " + b.label + ")", 0, 0});
  };

  state[0] = std::string();
  std::deque<int> work{0};
  while (!work.empty()) {
    int bi = work.front();
    work.pop_front();
    const Block& b = f.blocks[bi];
    std::string s = *state[bi];
    for (const auto& in : b.instrs) {
      switch (in.op) {
        case Opcode::RoiBegin:
        case Opcode::RoiEnter:
          if (!s.empty()) fail("nested ROI \"" + in.roi + "\" inside \"" + s + "\"", b);
          s = in.roi;
          break;
        case Opcode::RoiEnd:
        case Opcode::RoiExit:
          if (s != in.roi) fail("unmatched ROI marker \"" + in.roi + "\"", b);
          s.clear();
          break;
        case Opcode::Ret:
          if (!s.empty()) fail("ROI \"" + s + "\" not closed on all paths", b);
          break;
        default: break;
      }
    }
    for (const auto& succ : b.successors()) {
      auto it = index.find(succ);
      if (it == index.end()) continue;
      auto& st = state[it->second];
      if (!st) {
        st = s;
        work.push_back(it->second);
      } else if (*st != s) {
        const std::string& open = s.empty() ? *st : s;
        fail("ROI \"" + open + "\" not closed on all paths", f.blocks[it->second]);
      }
    }
  }
  return state;
}

std::vector<Diagnostic> check_module(const Module& m) {
  Checker c{m, {}};
  c.run();
  return c.diags;
}

void validate(const Module& m) {
  auto diags = check_module(m);
  for (const auto& d : diags)
    if (d.severity == Severity::Error) throw Error(std::move(diags));
}

}  // namespace memroi
