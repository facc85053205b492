#include <cctype>
#include <charconv>
#include <set>

#include "memroi/eir.hpp"

namespace memroi {
namespace {

enum class Tok { Ident, Symbol, Int, String, Punct, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;  // identifier/symbol name (no '@'), string body, punct char
  std::int64_t value = 0;
  int column = 0;
};

std::string_view describe(Tok k) {
  switch (k) {
    case Tok::Ident: return "identifier";
    case Tok::Symbol: return "@name";
    case Tok::Int: return "integer";
    case Tok::String: return "string";
    case Tok::Punct: return "punctuation";
    case Tok::End: return "end of line";
  }
  return "token";
}

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.';
}

class Line {
 public:
  Line(std::string_view text, int lineno) : lineno_(lineno) { lex(text); }

  const Token& peek() const { return toks_[pos_]; }
  bool at_end() const { return peek().kind == Tok::End; }

  [[noreturn]] void fail(const std::string& msg, int column) const {
    throw Error(Diagnostic{Severity::Error, msg, lineno_, column});
  }
  [[noreturn]] void expected(std::string_view what) const {
    const Token& t = peek();
    std::string got = t.kind == Tok::End ? "end of line" : "'" + t.text + "'";
    if (t.kind == Tok::Int) got = "'" + std::to_string(t.value) + "'";
    fail("expected " + std::string(what) + ", got " + got, t.column);
  }

  Token next() { return toks_[pos_ == toks_.size() - 1 ? pos_ : pos_++]; }

  bool accept_punct(char c) {
    if (peek().kind == Tok::Punct && peek().text[0] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  void expect_punct(char c) {
    if (!accept_punct(c)) expected(std::string("'") + c + "'");
  }
  bool accept_word(std::string_view w) {
    if (peek().kind == Tok::Ident && peek().text == w) {
      ++pos_;
      return true;
    }
    return false;
  }
  void expect_word(std::string_view w) {
    if (!accept_word(w)) expected("'" + std::string(w) + "'");
  }
  std::string expect_ident(std::string_view what = "identifier") {
    if (peek().kind != Tok::Ident) expected(what);
    return next().text;
  }
  std::string expect_symbol() {
    if (peek().kind != Tok::Symbol) expected(describe(Tok::Symbol));
    return next().text;
  }
  std::string expect_string() {
    if (peek().kind != Tok::String) expected("quoted ROI name");
    return next().text;
  }
  std::int64_t expect_int(std::string_view what = "integer") {
    if (peek().kind != Tok::Int) expected(what);
    return next().value;
  }
  std::uint64_t expect_uint(std::string_view what = "non-negative integer") {
    const Token& t = peek();
    std::int64_t v = expect_int(what);
    if (v < 0) fail(std::string(what) + " must be non-negative", t.column);
    return static_cast<std::uint64_t>(v);
  }
  Operand expect_operand() {
    if (peek().kind == Tok::Int) return Operand::of_imm(next().value);
    if (peek().kind == Tok::Ident) return Operand::of_reg(next().text);
    expected("register or integer");
  }
  void expect_end() {
    if (!at_end()) expected("end of line");
  }
  int lineno() const { return lineno_; }

 private:
  void lex(std::string_view s) {
    std::size_t i = 0;
    while (i < s.size()) {
      char c = s[i];
      int col = static_cast<int>(i) + 1;
      if (c == ';') break;
      if (std::isspace(static_cast<unsigned char>(c))) {
        ++i;
        continue;
      }
      if (ident_start(c)) {
        std::size_t j = i;
        while (j < s.size() && ident_char(s[j])) ++j;
        toks_.push_back({Tok::Ident, std::string(s.substr(i, j - i)), 0, col});
        i = j;
      } else if (c == '@') {
        std::size_t j = i + 1;
        if (j >= s.size() || !ident_start(s[j])) fail("expected function name after '@'", col);
        while (j < s.size() && ident_char(s[j])) ++j;
        toks_.push_back({Tok::Symbol, std::string(s.substr(i + 1, j - i - 1)), 0, col});
        i = j;
      } else if (std::isdigit(static_cast<unsigned char>(c)) ||
                 (c == '-' && i + 1 < s.size() && std::isdigit(static_cast<unsigned char>(s[i + 1])))) {
        std::size_t j = i + 1;
        while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
        std::int64_t v = 0;
        auto [p, ec] = std::from_chars(s.data() + i, s.data() + j, v);
        if (ec != std::errc() || p != s.data() + j) fail("integer out of range", col);
        toks_.push_back({Tok::Int, std::string(s.substr(i, j - i)), v, col});
        i = j;
      } else if (c == '"') {
        std::size_t j = i + 1;
        while (j < s.size() && s[j] != '"') ++j;
        if (j >= s.size()) fail("unterminated string", col);
        toks_.push_back({Tok::String, std::string(s.substr(i + 1, j - i - 1)), 0, col});
        i = j + 1;
      } else if (std::string_view(",()[]{}:!").find(c) != std::string_view::npos) {
        toks_.push_back({Tok::Punct, std::string(1, c), 0, col});
        ++i;
      } else {
        fail(std::string("unexpected character '") + c + "'", col);
      }
    }
    toks_.push_back({Tok::End, "", 0, static_cast<int>(s.size()) + 1});
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  int lineno_;
};

Space parse_space(Line& ln) {
  const Token t = ln.peek();
  std::string w = ln.expect_ident("address space");
  if (w == "heap") return Space::Heap;
  if (w == "global") return Space::Global;
  if (w == "stack") return Space::Stack;
  ln.fail("unknown address space '" + w + "' (expected heap, global or stack)", t.column);
}

std::uint8_t parse_size(Line& ln) {
  const Token t = ln.peek();
  std::int64_t v = ln.expect_int("access size");
  if (v != 1 && v != 2 && v != 4 && v != 8) ln.fail("access size must be 1, 2, 4 or 8", t.column);
  return static_cast<std::uint8_t>(v);
}

std::vector<Operand> parse_args(Line& ln) {
  std::vector<Operand> args;
  ln.expect_punct('(');
  if (ln.accept_punct(')')) return args;
  do {
    args.push_back(ln.expect_operand());
  } while (ln.accept_punct(','));
  ln.expect_punct(')');
  return args;
}

Instr parse_instr(Line& ln) {
  const Token head = ln.peek();
  std::string op = ln.expect_ident("instruction");
  Instr in;
  if (op == "const") {
    std::string dst = ln.expect_ident("destination register");
    ln.expect_punct(',');
    in = Instr::make_const(dst, ln.expect_int());
  } else if (op == "add" || op == "sub" || op == "mul" || op == "cmplt") {
    Opcode code = op == "add"   ? Opcode::Add
                  : op == "sub" ? Opcode::Sub
                  : op == "mul" ? Opcode::Mul
                                : Opcode::CmpLt;
    std::string dst = ln.expect_ident("destination register");
    ln.expect_punct(',');
    Operand a = ln.expect_operand();
    ln.expect_punct(',');
    Operand b = ln.expect_operand();
    in = Instr::make_alu(code, dst, a, b);
  } else if (op == "fop") {
    in = Instr::make_fop();
  } else if (op == "load") {
    std::string dst = ln.expect_ident("destination register");
    ln.expect_punct(',');
    Space sp = parse_space(ln);
    ln.expect_punct(',');
    in = Instr::make_load(dst, sp, parse_size(ln));
  } else if (op == "store") {
    Space sp = parse_space(ln);
    ln.expect_punct(',');
    in = Instr::make_store(sp, parse_size(ln));
  } else if (op == "memcpy" || op == "memmove" || op == "memset") {
    Opcode code = op == "memcpy" ? Opcode::Memcpy : op == "memmove" ? Opcode::Memmove : Opcode::Memset;
    const Token t = ln.peek();
    Operand len = ln.expect_operand();
    if (len.is_imm && len.imm < 0) ln.fail("intrinsic length must be non-negative", t.column);
    in = Instr::make_intrinsic(code, len);
  } else if (op == "call") {
    std::string dst;
    if (ln.peek().kind == Tok::Ident) {
      dst = ln.expect_ident();
      ln.expect_punct(',');
    }
    std::string callee = ln.expect_symbol();
    in = Instr::make_call(dst, callee, parse_args(ln));
  } else if (op == "icall") {
    std::string sel = ln.expect_ident("selector register");
    ln.expect_punct(',');
    ln.expect_punct('[');
    std::vector<std::string> table;
    if (!ln.accept_punct(']')) {
      do {
        table.push_back(ln.expect_symbol());
      } while (ln.accept_punct(','));
      ln.expect_punct(']');
    }
    std::vector<Operand> args;
    if (ln.peek().kind == Tok::Punct && ln.peek().text == "(") args = parse_args(ln);
    in = Instr::make_icall(sel, table, args);
  } else if (op == "br") {
    std::string cond = ln.expect_ident("condition register");
    ln.expect_punct(',');
    std::string t = ln.expect_ident("label");
    ln.expect_punct(',');
    std::string f = ln.expect_ident("label");
    in = Instr::make_br(cond, t, f);
  } else if (op == "jmp") {
    in = Instr::make_jmp(ln.expect_ident("label"));
  } else if (op == "ret") {
    if (ln.at_end()) in = Instr::make_ret();
    else in = Instr::make_ret(ln.expect_operand());
  } else if (op == "roi_begin" || op == "roi_end" || op == "roi_enter" || op == "roi_exit") {
    Opcode code = op == "roi_begin" ? Opcode::RoiBegin
                  : op == "roi_end" ? Opcode::RoiEnd
                  : op == "roi_enter" ? Opcode::RoiEnter
                                      : Opcode::RoiExit;
    in = Instr::make_marker(code, ln.expect_string());
  } else if (op == "ctr_inc") {
    auto idx = static_cast<std::uint32_t>(ln.expect_uint("counter index"));
    if (!ln.accept_punct(',')) {
      in = Instr::make_ctr_inc(idx);
    } else if (ln.accept_word("trip")) {
      std::string bound = ln.expect_ident("bound register");
      ln.expect_punct(',');
      std::int64_t init = ln.expect_int("initial value");
      ln.expect_punct(',');
      const Token st = ln.peek();
      std::int64_t step = ln.expect_int("step");
      if (step <= 0) ln.fail("trip step must be positive", st.column);
      in = Instr::make_ctr_trip(idx, bound, init, step);
    } else {
      in = Instr::make_ctr_add(idx, ln.expect_int("increment amount"));
    }
  } else if (op == "isz_add") {
    SizeArray arr;
    if (ln.accept_word("load")) arr = SizeArray::Load;
    else if (ln.accept_word("store")) arr = SizeArray::Store;
    else ln.expected("'load' or 'store'");
    ln.expect_punct(',');
    auto slot = static_cast<std::uint32_t>(ln.expect_uint("slot index"));
    ln.expect_punct(',');
    in = Instr::make_isz_add(arr, slot, ln.expect_operand());
  } else {
    ln.fail("unknown instruction '" + op + "'", head.column);
  }
  ln.expect_end();
  return in;
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) {
      if (start < text.size()) lines.push_back(text.substr(start));
      break;
    }
    std::string_view l = text.substr(start, nl - start);
    if (!l.empty() && l.back() == '\r') l.remove_suffix(1);
    lines.push_back(l);
    start = nl + 1;
  }
  return lines;
}

}  // namespace

Module parse_module_unchecked(std::string_view text) {
  Module m;
  Function* fn = nullptr;
  std::set<std::string> labels;
  int func_line = 0;
  auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    Line ln(lines[i], static_cast<int>(i) + 1);
    if (ln.at_end()) continue;
    const Token head = ln.peek();

    if (!fn) {
      std::string kw = ln.expect_ident("'global', 'extern', 'bank', 'bank_clone' or 'func'");
      if (kw == "global") {
        std::string name = ln.expect_symbol();
        m.globals.push_back({name, ln.expect_uint("global size")});
      } else if (kw == "extern") {
        m.externs.push_back(ln.expect_symbol());
      } else if (kw == "bank") {
        BankDecl b;
        b.roi = ln.expect_string();
        ln.expect_word("id");
        b.id = static_cast<std::uint32_t>(ln.expect_uint());
        ln.expect_word("counters");
        b.counters = static_cast<std::uint32_t>(ln.expect_uint());
        ln.expect_word("isz");
        b.isz_slots = static_cast<std::uint32_t>(ln.expect_uint());
        ln.expect_word("period");
        const Token pt = ln.peek();
        b.period = ln.expect_uint("sampling period");
        if (b.period == 0) ln.fail("sampling period must be at least 1", pt.column);
        m.banks.push_back(std::move(b));
      } else if (kw == "bank_clone") {
        std::string roi = ln.expect_string();
        BankDecl* bank = nullptr;
        for (auto& b : m.banks)
          if (b.roi == roi) bank = &b;
        if (!bank) ln.fail("bank_clone for undeclared bank \"" + roi + "\"", head.column);
        CloneRange r;
        r.function = ln.expect_symbol();
        ln.expect_word("ctr");
        r.ctr_base = static_cast<std::uint32_t>(ln.expect_uint());
        ln.expect_word("isz");
        r.isz_base = static_cast<std::uint32_t>(ln.expect_uint());
        bank->clones.push_back(std::move(r));
      } else if (kw == "func") {
        Function f;
        f.name = ln.expect_symbol();
        ln.expect_punct('(');
        if (!ln.accept_punct(')')) {
          do {
            f.params.push_back(ln.expect_ident("parameter name"));
          } while (ln.accept_punct(','));
          ln.expect_punct(')');
        }
        while (!ln.accept_punct('{')) {
          if (ln.accept_word("entry")) f.is_entry = true;
          else if (ln.accept_word("clone")) f.is_clone = true;
          else ln.expected("'entry', 'clone' or '{'");
        }
        ln.expect_end();
        m.functions.push_back(std::move(f));
        fn = &m.functions.back();
        labels.clear();
        func_line = ln.lineno();
      } else {
        ln.fail("unknown top-level keyword '" + kw + "'", head.column);
      }
      ln.expect_end();
      continue;
    }

    if (ln.accept_punct('}')) {
      ln.expect_end();
      if (fn->blocks.empty())
        throw Error(Diagnostic{Severity::Error, "function @" + fn->name + " has no blocks",
                               func_line, 1});
      fn = nullptr;
      continue;
    }

    // `label:` opens a block; anything else is an instruction.
    bool is_label = head.kind == Tok::Ident;
    if (is_label) {
      Line probe(lines[i], static_cast<int>(i) + 1);
      probe.next();
      is_label = probe.peek().kind == Tok::Punct && probe.peek().text == ":";
    }
    if (is_label) {
      std::string label = ln.expect_ident();
      ln.expect_punct(':');
      Block b;
      b.label = label;
      if (ln.accept_punct('!')) {
        ln.expect_word("synthetic");
        b.synthetic = true;
      }
      ln.expect_end();
      if (!labels.insert(label).second)
        ln.fail("duplicate label " + label + " in @" + fn->name, head.column);
      fn->blocks.push_back(std::move(b));
      continue;
    }
    if (fn->blocks.empty()) ln.fail("instruction before first block label", head.column);
    fn->blocks.back().instrs.push_back(parse_instr(ln));
  }
  if (fn)
    throw Error(Diagnostic{Severity::Error, "unterminated function @" + fn->name + " (missing '}')",
                           func_line, 1});
  return m;
}

Module parse_module(std::string_view text) {
  Module m = parse_module_unchecked(text);
  validate(m);
  return m;
}

}  // namespace memroi
