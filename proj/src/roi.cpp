#include <algorithm>
#include <deque>
#include <map>
#include <set>

#include "memroi/instrument.hpp"

namespace memroi {

std::string clone_name(std::string_view fn) { return std::string(fn) + std::string(kCloneSuffix); }

namespace {

std::string fresh_label(const Function& f, const std::string& base) {
  if (!f.find_block(base)) return base;
  for (int k = 1;; ++k) {
    std::string l = base + "." + std::to_string(k);
    if (!f.find_block(l)) return l;
  }
}

bool is_marker(Opcode op) { return op == Opcode::RoiBegin || op == Opcode::RoiEnd; }

bool empty_pair(const Instr& begin, const Instr& end) {
  return begin.op == Opcode::RoiBegin && end.op == Opcode::RoiEnd && begin.roi == end.roi;
}

void split_markers(Function& f) {
  for (std::size_t bi = 0; bi < f.blocks.size(); ++bi) {
    auto& ins = f.blocks[bi].instrs;
    for (std::size_t i = 1; i < ins.size(); ++i) {
      if (!is_marker(ins[i].op)) continue;
      if (empty_pair(ins[i - 1], ins[i])) continue;
      if (i + 1 < ins.size() && empty_pair(ins[i], ins[i + 1])) continue;
      Block tail;
      tail.label = fresh_label(f, f.blocks[bi].label + (ins[i].op == Opcode::RoiBegin ? ".roi" : ".post"));
      tail.instrs.assign(ins.begin() + static_cast<std::ptrdiff_t>(i), ins.end());
      ins.erase(ins.begin() + static_cast<std::ptrdiff_t>(i), ins.end());
      ins.push_back(Instr::make_jmp(tail.label));
      f.blocks.insert(f.blocks.begin() + static_cast<std::ptrdiff_t>(bi) + 1, std::move(tail));
      break;
    }
  }
}

bool is_empty_roi_block(const Block& b) {
  return b.instrs.size() >= 2 && empty_pair(b.instrs[0], b.instrs[1]);
}

}  // namespace

std::pair<Module, std::vector<RoiDescriptor>> find_rois(const Module& m) {
  Module out = m;
  std::map<std::string, RoiDescriptor> found;
  for (auto& f : out.functions) {
    if (f.is_clone || f.blocks.empty()) continue;
    split_markers(f);
    auto states = roi_entry_states(f);
    for (std::size_t bi = 0; bi < f.blocks.size(); ++bi) {
      const Block& b = f.blocks[bi];
      if (!states[bi]) continue;
      for (std::size_t i = 0; i < b.instrs.size(); ++i) {
        const Instr& in = b.instrs[i];
        if (in.op != Opcode::RoiBegin) continue;
        auto& d = found[in.roi];
        d.name = in.roi;
        d.function = f.name;
        if (i == 0 && !is_empty_roi_block(b)) d.start = b.label;
      }
      std::string member;
      if (!b.instrs.empty() && b.instrs[0].op == Opcode::RoiBegin && !is_empty_roi_block(b))
        member = b.instrs[0].roi;
      else if (!states[bi]->empty() && !(b.instrs[0].op == Opcode::RoiEnd && b.instrs[0].roi == *states[bi]))
        member = *states[bi];
      if (!member.empty()) found[member].blocks.push_back(b.label);
    }
  }
  std::vector<RoiDescriptor> rois;
  for (auto& [name, d] : found) {
    d.bank_id = static_cast<std::uint32_t>(rois.size());
    rois.push_back(std::move(d));
  }
  return {std::move(out), std::move(rois)};
}

CloneResult clone_functions(Module& m, const std::vector<RoiDescriptor>& rois,
                            const std::vector<std::string>& also) {
  CloneResult res;
  const std::set<std::string> also_set(also.begin(), also.end());
  for (const auto& a : also_set)
    if (!m.find_function(a))
      res.diagnostics.push_back({Severity::Warning, "--also-instrument target @" + a + " is not a defined function", 0, 0});

  // Direct callees plus listed icall targets; extern calls and unlisted
  // icall targets are tallied as uncovered sites.
  struct Scan {
    std::set<std::string> callees;
    std::uint64_t indirect = 0;
    std::uint64_t external = 0;
  };
  auto scan_block = [&](const Block& b, Scan& s, const std::string& roi) {
    for (const auto& in : b.instrs) {
      if (in.op == Opcode::Call) {
        if (m.find_function(in.callee)) {
          s.callees.insert(in.callee);
        } else {
          ++s.external;
          res.diagnostics.push_back({Severity::Warning,
                                     "call to extern @" + in.callee + " in ROI \"" + roi +
                                         "\" is counted but its body is not instrumented",
                                     0, 0});
        }
      } else if (in.op == Opcode::ICall) {
        bool uncovered = false;
        for (const auto& t : in.table) {
          if (also_set.count(t)) s.callees.insert(t);
          else uncovered = true;
        }
        if (uncovered) {
          ++s.indirect;
          std::string list;
          for (const auto& t : in.table)
            if (!also_set.count(t)) list += (list.empty() ? "@" : ", @") + t;
          res.diagnostics.push_back({Severity::Warning,
                                     "uncovered indirect call in ROI \"" + roi + "\" (targets " + list +
                                         "; pass --also-instrument to cover them)",
                                     0, 0});
        }
      }
    }
  };

  std::set<std::string> all_clones;
  for (const auto& r : rois) {
    Scan s;
    const Function* f = m.find_function(r.function);
    const std::set<std::string> members(r.blocks.begin(), r.blocks.end());
    for (const auto& b : f->blocks)
      if (members.count(b.label)) scan_block(b, s, r.name);
    std::set<std::string> reach;
    std::deque<std::string> work(s.callees.begin(), s.callees.end());
    while (!work.empty()) {
      std::string g = work.front();
      work.pop_front();
      if (!reach.insert(g).second) continue;
      Scan inner;
      for (const auto& b : m.find_function(g)->blocks) scan_block(b, inner, r.name);
      s.indirect += inner.indirect;
      s.external += inner.external;
      for (const auto& c : inner.callees)
        if (!reach.count(c)) work.push_back(c);
    }
    std::vector<std::string> names;
    for (const auto& g : reach) {
      names.push_back(clone_name(g));
      all_clones.insert(g);
    }
    std::sort(names.begin(), names.end());
    res.reachable.push_back(std::move(names));
    res.uncovered_indirect.push_back(s.indirect);
    res.uncovered_extern.push_back(s.external);
  }

  auto retarget = [&](Block& b) {
    for (auto& in : b.instrs) {
      if (in.op == Opcode::Call && all_clones.count(in.callee)) in.callee = clone_name(in.callee);
      if (in.op == Opcode::ICall)
        for (auto& t : in.table)
          if (all_clones.count(t)) t = clone_name(t);
    }
  };

  std::vector<Function> clones;
  for (const auto& g : all_clones) {
    Function c = *m.find_function(g);
    c.name = clone_name(g);
    c.is_clone = true;
    c.is_entry = false;
    for (auto& b : c.blocks) {
      std::erase_if(b.instrs, [](const Instr& in) { return is_marker(in.op); });
      retarget(b);
    }
    res.clone_table[g] = c.name;
    clones.push_back(std::move(c));
  }
  for (const auto& r : rois) {
    Function* f = m.find_function(r.function);
    const std::set<std::string> members(r.blocks.begin(), r.blocks.end());
    for (auto& b : f->blocks)
      if (members.count(b.label)) retarget(b);
  }
  for (auto& c : clones) m.functions.push_back(std::move(c));
  return res;
}

}  // namespace memroi
