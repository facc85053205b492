#include "memroi/gen.hpp"

#include <algorithm>
#include <random>
#include <set>
#include <sstream>

#include "memroi/diagnostics.hpp"

namespace memroi {

GenProfile parse_profile(std::string_view name) {
  if (name == "mixed") return GenProfile::Mixed;
  if (name == "loops") return GenProfile::Loops;
  if (name == "cf") return GenProfile::ControlFlow;
  throw Error("unknown generator profile '" + std::string(name) + "' (expected mixed, loops or cf)");
}

std::string_view profile_name(GenProfile p) {
  switch (p) {
    case GenProfile::Mixed: return "mixed";
    case GenProfile::Loops: return "loops";
    case GenProfile::ControlFlow: return "cf";
  }
  return "mixed";
}

namespace {

constexpr int kHelpers = 3;

struct FnText {
  std::string header;
  std::vector<std::pair<std::string, std::vector<std::string>>> blocks;
};

class Gen {
 public:
  explicit Gen(const GenOptions& o) : o_(o), rng_(o.seed) {}

  GenProgram run() {
    GenProgram p;
    p.inputs = {static_cast<std::int64_t>(below(7)), static_cast<std::int64_t>(below(7))};
    std::vector<FnText> fns;
    // Helpers are generated last-first so each one may call the later ones.
    for (int h = kHelpers - 1; h >= 0; --h) {
      helper_ = h;
      fns.push_back(function("h" + std::to_string(h), {"p"}, false));
    }
    helper_ = -1;
    fns.push_back(function("main", {"a", "b"}, true));
    if (uses_rec_) fns.push_back(recursive());

    std::ostringstream os;
    if (uses_ext_) os << "extern @ext\n";
    os << "global @g 64\n";
    for (const auto& f : fns) {
      os << "\n" << f.header << " {\n";
      for (const auto& [label, lines] : f.blocks) {
        os << label << ":\n";
        for (const auto& l : lines) os << "  " << l << "\n";
      }
      os << "}\n";
    }
    p.text = os.str();
    p.also_instrument.assign(also_.begin(), also_.end());
    return p;
  }

 private:
  std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : rng_() % n; }
  bool chance(int pct) { return static_cast<int>(below(100)) < pct; }
  template <class T>
  const T& pick(const std::vector<T>& v) {
    return v[below(v.size())];
  }

  std::string reg() { return "r" + std::to_string(next_reg_++); }
  std::string label(const std::string& base) { return base + std::to_string(next_label_++); }

  void start(const std::string& l) {
    cur_->blocks.push_back({l, {}});
    ++blocks_;
  }
  void emit(const std::string& s) { cur_->blocks.back().second.push_back(s); }

  bool room(int blocks) const { return blocks_ + blocks <= o_.max_blocks - 4; }

  // Registers defined on every path to the current point; `small_` holds the
  // ones known to be small and non-negative.
  struct Mark {
    std::size_t avail, small;
  };
  Mark mark() const { return {avail_.size(), small_.size()}; }
  void restore(Mark m) {
    avail_.resize(m.avail);
    small_.resize(m.small);
  }
  void def(const std::string& r, bool small) {
    avail_.push_back(r);
    if (small) small_.push_back(r);
  }
  std::string operand() {
    if (avail_.empty() || chance(25)) return std::to_string(below(9));
    return pick(avail_);
  }

  FnText function(const std::string& name, std::vector<std::string> params, bool is_main) {
    FnText f;
    f.header = "func @" + name + "(";
    for (std::size_t i = 0; i < params.size(); ++i) f.header += (i ? ", " : "") + params[i];
    f.header += ")";
    if (is_main) f.header += " entry";
    cur_ = &f;
    avail_.clear();
    small_.clear();
    // Arguments of @main are small inputs; helper arguments can be anything.
    for (const auto& p : params) def(p, is_main);
    start("entry");
    if (is_main) {
      rois_left_ = std::max(1, static_cast<int>(1 + below(static_cast<std::uint64_t>(o_.max_rois))));
      stmts(0, true, static_cast<int>(2 + below(3)));
      if (rois_used_ == 0) roi(0);
      emit("ret " + pick(avail_));
    } else {
      const int budget = o_.profile == GenProfile::ControlFlow ? 1 : 2;
      stmts(1, false, static_cast<int>(1 + below(static_cast<std::uint64_t>(budget))));
      emit("ret " + pick(avail_));
    }
    cur_ = nullptr;
    return f;
  }

  FnText recursive() {
    FnText f;
    f.header = "func @rec(n)";
    f.blocks.push_back({"entry", {"cmplt c, 0, n", "br c, down, base"}});
    f.blocks.push_back({"down", {"sub m, n, 1", "load x, heap, 8", "call r, @rec(m)", "add s, r, 1", "ret s"}});
    f.blocks.push_back({"base", {"store global, 4", "ret 0"}});
    return f;
  }

  void stmts(int depth, bool roi_ok, int n) {
    for (int i = 0; i < n; ++i) stmt(depth, roi_ok);
  }

  void stmt(int depth, bool roi_ok) {
    int w_if = 20, w_loop = 20, w_call = 15, w_roi = 15;
    if (o_.profile == GenProfile::Loops) {
      w_if = 8;
      w_loop = 40;
    } else if (o_.profile == GenProfile::ControlFlow) {
      w_if = 45;
      w_loop = 5;
    }
    if (depth >= o_.max_depth) w_if = w_loop = 0;
    if (!room(6)) w_if = w_loop = 0;
    if (!roi_ok || rois_used_ >= rois_left_ || !room(4)) w_roi = 0;
    const int total = 30 + w_if + w_loop + w_call + w_roi;
    int r = static_cast<int>(below(static_cast<std::uint64_t>(total)));
    if ((r -= 30) < 0) return straight();
    if ((r -= w_if) < 0) return branch(depth, roi_ok);
    if ((r -= w_loop) < 0) return loop(depth, roi_ok);
    if ((r -= w_call) < 0) return call();
    return roi(depth);
  }

  void straight() {
    const int n = static_cast<int>(1 + below(4));
    for (int i = 0; i < n; ++i) {
      const int k = static_cast<int>(below(o_.intrinsics ? 11 : 9));
      static const char* const spaces[] = {"heap", "global", "stack"};
      static const int sizes[] = {1, 2, 4, 8};
      switch (k) {
        case 0:
        case 1: {
          const std::string d = reg();
          const bool small = chance(50);
          if (small) emit("const " + d + ", " + std::to_string(below(7)));
          else emit("add " + d + ", " + operand() + ", " + operand());
          def(d, small);
          break;
        }
        case 2: {
          const std::string d = reg();
          static const char* const ops[] = {"mul", "sub", "cmplt"};
          emit(std::string(ops[below(3)]) + " " + d + ", " + operand() + ", " + operand());
          def(d, false);
          break;
        }
        case 3: emit("fop"); break;
        case 4:
        case 5: {
          const std::string d = reg();
          emit("load " + d + ", " + spaces[below(3)] + ", " + std::to_string(sizes[below(4)]));
          def(d, false);
          break;
        }
        case 6:
        case 7: emit(std::string("store ") + spaces[below(3)] + ", " + std::to_string(sizes[below(4)])); break;
        case 8: emit("fop"); break;
        default: intrinsic(); break;
      }
    }
  }

  void intrinsic() {
    static const char* const names[] = {"memcpy", "memmove", "memset"};
    const std::string op = names[below(3)];
    if (small_.empty() || chance(50)) {
      emit(op + " " + std::to_string(below(65)));
    } else {
      const std::string len = reg();
      emit("mul " + len + ", " + pick(small_) + ", 8");
      def(len, false);
      emit(op + " " + len);
    }
  }

  void branch(int depth, bool roi_ok) {
    const std::string c = reg();
    emit("cmplt " + c + ", " + operand() + ", " + std::to_string(below(7)));
    def(c, false);
    const std::string t = label("then"), j = label("join");
    const bool has_else = chance(50);
    const std::string e = has_else ? label("else") : j;
    emit("br " + c + ", " + t + ", " + e);
    Mark m = mark();
    start(t);
    stmts(depth + 1, roi_ok, static_cast<int>(1 + below(2)));
    emit("jmp " + j);
    restore(m);
    if (has_else) {
      start(e);
      stmts(depth + 1, roi_ok, static_cast<int>(1 + below(2)));
      emit("jmp " + j);
      restore(m);
    }
    start(j);
  }

  void loop(int depth, bool roi_ok) {
    // 0 constant, 1 guarded constant (preheader ends in a branch), 2 runtime,
    // 3 reassigned bound, 4 early exit, 5 bottom-tested
    std::vector<int> kinds = {0, 0, 1, 2, 2, 3, 4, 5};
    if (o_.profile == GenProfile::Loops) kinds = {0, 0, 0, 1, 2, 2};
    const int kind = pick(kinds);
    const std::string i = reg();
    const std::int64_t init = static_cast<std::int64_t>(below(3));
    const std::int64_t step = 1 + static_cast<std::int64_t>(below(2));
    std::string bound = std::to_string(init + static_cast<std::int64_t>(below(7)));
    emit("const " + i + ", " + std::to_string(init));
    def(i, true);
    const std::string h = label("head"), body = label("body"), x = label("exit");

    if (kind == 2) {
      if (chance(50) || small_.empty()) {
        bound = reg();
        emit("add " + bound + ", " + pick(small_.empty() ? std::vector<std::string>{"0"} : small_) + ", " +
             std::to_string(below(3)));
        def(bound, true);
      } else {
        bound = pick(small_);
      }
    } else if (kind == 3) {
      const std::string n = reg();
      emit("const " + n + ", " + bound);
      def(n, true);
      bound = n;
    }

    Mark m = mark();
    if (kind == 5) {
      emit("jmp " + h);
      start(h);
      stmts(depth + 1, roi_ok, static_cast<int>(1 + below(2)));
      const std::string c = reg();
      emit("add " + i + ", " + i + ", " + std::to_string(step));
      emit("cmplt " + c + ", " + i + ", " + bound);
      emit("br " + c + ", " + h + ", " + x);
      restore(m);
      start(x);
      return;
    }
    if (kind == 1) {
      const std::string g = reg();
      emit("cmplt " + g + ", " + operand() + ", " + std::to_string(below(7)));
      emit("br " + g + ", " + h + ", " + x);
    } else {
      emit("jmp " + h);
    }
    start(h);
    const std::string c = reg();
    emit("cmplt " + c + ", " + i + ", " + bound);
    emit("br " + c + ", " + body + ", " + x);
    start(body);
    if (kind == 3) emit("add " + bound + ", " + bound + ", 0");
    stmts(depth + 1, roi_ok, static_cast<int>(1 + below(2)));
    if (kind == 4) {
      const std::string e = reg();
      const std::string cont = label("cont");
      emit("cmplt " + e + ", " + std::to_string(below(5)) + ", " + i);
      emit("br " + e + ", " + x + ", " + cont);
      start(cont);
    }
    emit("add " + i + ", " + i + ", " + std::to_string(step));
    emit("jmp " + h);
    restore(m);
    start(x);
  }

  void call() {
    std::vector<std::string> callees;
    for (int j = helper_ + 1; j < kHelpers; ++j) callees.push_back("h" + std::to_string(j));
    const int k = static_cast<int>(below(4));
    if (k == 0 && o_.externs) {
      uses_ext_ = true;
      emit("call @ext(" + operand() + ")");
      return;
    }
    if (k == 1 && o_.recursion && helper_ < 0) {
      uses_rec_ = true;
      const std::string d = reg();
      emit("call " + d + ", @rec(" + std::to_string(1 + below(2)) + ")");
      def(d, false);
      return;
    }
    if (callees.empty()) return straight();
    if (k == 2 && o_.icalls && callees.size() >= 2) {
      const std::string a = pick(callees);
      std::string b = pick(callees);
      if (b == a) b = callees.front() == a ? callees.back() : callees.front();
      also_.insert(a);
      also_.insert(b);
      emit("icall " + operand_reg() + ", [@" + a + ", @" + b + "](" + operand() + ")");
      return;
    }
    const std::string d = reg();
    emit("call " + d + ", @" + pick(callees) + "(" + operand() + ")");
    def(d, false);
  }

  std::string operand_reg() { return avail_.empty() ? "p" : pick(avail_); }

  void roi(int depth) {
    const std::string name = "R" + std::to_string(rois_used_++);
    emit("roi_begin \"" + name + "\"");
    Mark m = mark();
    stmts(depth, false, static_cast<int>(1 + below(3)));
    restore(m);
    emit("roi_end \"" + name + "\"");
  }

  GenOptions o_;
  std::mt19937_64 rng_;
  FnText* cur_ = nullptr;
  std::vector<std::string> avail_, small_;
  std::set<std::string> also_;
  int next_reg_ = 0;
  int next_label_ = 0;
  int blocks_ = 0;
  int helper_ = -1;
  int rois_used_ = 0;
  int rois_left_ = 1;
  bool uses_ext_ = false;
  bool uses_rec_ = false;
};

}  // namespace

GenProgram generate(const GenOptions& opts) { return Gen(opts).run(); }

}  // namespace memroi
