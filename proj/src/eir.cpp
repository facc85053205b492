#include "memroi/eir.hpp"

#include <cstdio>
#include <sstream>

namespace memroi {

// Operand layout per opcode:
//   const       args = {imm}
//   alu/cmplt   args = {a, b}
//   intrinsics  args = {length}
//   icall       args = {selector}, call_args
//   br          args = {cond}
//   ret         args = {} or {value}
//   ctr_inc     args = {} (One), {amount imm} (Constant), {bound} (Trip)
//   isz_add     args = {length}

Instr Instr::make_const(std::string dst, std::int64_t value) {
  Instr in;
  in.op = Opcode::Const;
  in.dst = std::move(dst);
  in.args = {Operand::of_imm(value)};
  return in;
}

Instr Instr::make_alu(Opcode op, std::string dst, Operand a, Operand b) {
  Instr in;
  in.op = op;
  in.dst = std::move(dst);
  in.args = {std::move(a), std::move(b)};
  return in;
}

Instr Instr::make_fop() {
  Instr in;
  in.op = Opcode::Fop;
  return in;
}

Instr Instr::make_load(std::string dst, Space space, std::uint8_t size) {
  Instr in;
  in.op = Opcode::Load;
  in.dst = std::move(dst);
  in.space = space;
  in.size = size;
  return in;
}

Instr Instr::make_store(Space space, std::uint8_t size) {
  Instr in;
  in.op = Opcode::Store;
  in.space = space;
  in.size = size;
  return in;
}

Instr Instr::make_intrinsic(Opcode op, Operand length) {
  Instr in;
  in.op = op;
  in.args = {std::move(length)};
  return in;
}

Instr Instr::make_call(std::string dst, std::string callee, std::vector<Operand> args) {
  Instr in;
  in.op = Opcode::Call;
  in.dst = std::move(dst);
  in.callee = std::move(callee);
  in.call_args = std::move(args);
  return in;
}

Instr Instr::make_icall(std::string selector, std::vector<std::string> table,
                        std::vector<Operand> args) {
  Instr in;
  in.op = Opcode::ICall;
  in.args = {Operand::of_reg(std::move(selector))};
  in.table = std::move(table);
  in.call_args = std::move(args);
  return in;
}

Instr Instr::make_br(std::string cond, std::string if_true, std::string if_false) {
  Instr in;
  in.op = Opcode::Br;
  in.args = {Operand::of_reg(std::move(cond))};
  in.target = std::move(if_true);
  in.alt = std::move(if_false);
  return in;
}

Instr Instr::make_jmp(std::string target) {
  Instr in;
  in.op = Opcode::Jmp;
  in.target = std::move(target);
  return in;
}

Instr Instr::make_ret(std::optional<Operand> value) {
  Instr in;
  in.op = Opcode::Ret;
  if (value) in.args = {std::move(*value)};
  return in;
}

Instr Instr::make_marker(Opcode op, std::string roi) {
  Instr in;
  in.op = op;
  in.roi = std::move(roi);
  return in;
}

Instr Instr::make_ctr_inc(std::uint32_t index) {
  Instr in;
  in.op = Opcode::CtrInc;
  in.index = index;
  in.inc = IncKind::One;
  return in;
}

Instr Instr::make_ctr_add(std::uint32_t index, std::int64_t amount) {
  Instr in = make_ctr_inc(index);
  in.inc = IncKind::Constant;
  in.args = {Operand::of_imm(amount)};
  return in;
}

Instr Instr::make_ctr_trip(std::uint32_t index, std::string bound, std::int64_t init,
                           std::int64_t step) {
  Instr in = make_ctr_inc(index);
  in.inc = IncKind::Trip;
  in.args = {Operand::of_reg(std::move(bound))};
  in.trip_init = init;
  in.trip_step = step;
  return in;
}

Instr Instr::make_isz_add(SizeArray array, std::uint32_t slot, Operand length) {
  Instr in;
  in.op = Opcode::IszAdd;
  in.array = array;
  in.index = slot;
  in.args = {std::move(length)};
  return in;
}

std::vector<std::string> Block::successors() const {
  if (instrs.empty()) return {};
  const Instr& t = instrs.back();
  switch (t.op) {
    case Opcode::Br:
      if (t.target == t.alt) return {t.target};
      return {t.target, t.alt};
    case Opcode::Jmp: return {t.target};
    default: return {};
  }
}

const Block* Function::find_block(std::string_view label) const {
  for (const auto& b : blocks)
    if (b.label == label) return &b;
  return nullptr;
}

Block* Function::find_block(std::string_view label) {
  for (auto& b : blocks)
    if (b.label == label) return &b;
  return nullptr;
}

int Function::block_index(std::string_view label) const {
  for (std::size_t i = 0; i < blocks.size(); ++i)
    if (blocks[i].label == label) return static_cast<int>(i);
  return -1;
}

const CloneRange* BankDecl::find_clone(std::string_view fn) const {
  for (const auto& c : clones)
    if (c.function == fn) return &c;
  return nullptr;
}

const Function* Module::find_function(std::string_view name) const {
  for (const auto& f : functions)
    if (f.name == name) return &f;
  return nullptr;
}

Function* Module::find_function(std::string_view name) {
  for (auto& f : functions)
    if (f.name == name) return &f;
  return nullptr;
}

bool Module::is_extern(std::string_view name) const {
  for (const auto& e : externs)
    if (e == name) return true;
  return false;
}

const BankDecl* Module::find_bank(std::string_view roi) const {
  for (const auto& b : banks)
    if (b.roi == roi) return &b;
  return nullptr;
}

const Function* Module::entry_function() const {
  for (const auto& f : functions)
    if (f.is_entry) return &f;
  return find_function("main");
}

std::optional<EventClass> event_class(const Instr& in) {
  switch (in.op) {
    case Opcode::Const:
    case Opcode::Add:
    case Opcode::Sub:
    case Opcode::Mul:
    case Opcode::CmpLt: return EventClass::IntOp;
    case Opcode::Fop: return EventClass::FpOp;
    case Opcode::Load: return EventClass::MemLoad;
    case Opcode::Store: return EventClass::MemStore;
    case Opcode::Memcpy:
    case Opcode::Memmove:
    case Opcode::Memset: return EventClass::Intrinsic;
    case Opcode::Call:
    case Opcode::ICall: return EventClass::Call;
    case Opcode::Br: return EventClass::Branch;
    case Opcode::Jmp: return EventClass::Jump;
    case Opcode::Ret: return EventClass::Return;
    case Opcode::RoiBegin:
    case Opcode::RoiEnd:
    case Opcode::RoiEnter:
    case Opcode::RoiExit:
    case Opcode::CtrInc:
    case Opcode::IszAdd: return std::nullopt;
  }
  return std::nullopt;
}

bool is_instrumentation(Opcode op) {
  return op == Opcode::RoiEnter || op == Opcode::RoiExit || op == Opcode::CtrInc ||
         op == Opcode::IszAdd;
}

bool is_intrinsic(Opcode op) {
  return op == Opcode::Memcpy || op == Opcode::Memmove || op == Opcode::Memset;
}

std::string_view opcode_name(Opcode op) {
  switch (op) {
    case Opcode::Const: return "const";
    case Opcode::Add: return "add";
    case Opcode::Sub: return "sub";
    case Opcode::Mul: return "mul";
    case Opcode::CmpLt: return "cmplt";
    case Opcode::Fop: return "fop";
    case Opcode::Load: return "load";
    case Opcode::Store: return "store";
    case Opcode::Memcpy: return "memcpy";
    case Opcode::Memmove: return "memmove";
    case Opcode::Memset: return "memset";
    case Opcode::Call: return "call";
    case Opcode::ICall: return "icall";
    case Opcode::Br: return "br";
    case Opcode::Jmp: return "jmp";
    case Opcode::Ret: return "ret";
    case Opcode::RoiBegin: return "roi_begin";
    case Opcode::RoiEnd: return "roi_end";
    case Opcode::RoiEnter: return "roi_enter";
    case Opcode::RoiExit: return "roi_exit";
    case Opcode::CtrInc: return "ctr_inc";
    case Opcode::IszAdd: return "isz_add";
  }
  return "?";
}

std::string_view space_name(Space s) {
  switch (s) {
    case Space::Heap: return "heap";
    case Space::Global: return "global";
    case Space::Stack: return "stack";
  }
  return "?";
}

namespace {

std::string operand_text(const Operand& o) {
  return o.is_imm ? std::to_string(o.imm) : o.reg;
}

std::string arg_list(const std::vector<Operand>& args) {
  std::string out = "(";
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (i) out += ", ";
    out += operand_text(args[i]);
  }
  return out + ")";
}

std::string quoted(const std::string& s) { return "\"" + s + "\""; }

}  // namespace

std::string print_instr(const Instr& in) {
  std::string name(opcode_name(in.op));
  switch (in.op) {
    case Opcode::Const: return name + " " + in.dst + ", " + operand_text(in.args[0]);
    case Opcode::Add:
    case Opcode::Sub:
    case Opcode::Mul:
    case Opcode::CmpLt:
      return name + " " + in.dst + ", " + operand_text(in.args[0]) + ", " +
             operand_text(in.args[1]);
    case Opcode::Fop: return name;
    case Opcode::Load:
      return name + " " + in.dst + ", " + std::string(space_name(in.space)) + ", " +
             std::to_string(in.size);
    case Opcode::Store:
      return name + " " + std::string(space_name(in.space)) + ", " + std::to_string(in.size);
    case Opcode::Memcpy:
    case Opcode::Memmove:
    case Opcode::Memset: return name + " " + operand_text(in.args[0]);
    case Opcode::Call:
      return name + " " + (in.dst.empty() ? "" : in.dst + ", ") + "@" + in.callee +
             arg_list(in.call_args);
    case Opcode::ICall: {
      std::string out = name + " " + operand_text(in.args[0]) + ", [";
      for (std::size_t i = 0; i < in.table.size(); ++i) {
        if (i) out += ", ";
        out += "@" + in.table[i];
      }
      return out + "]" + arg_list(in.call_args);
    }
    case Opcode::Br:
      return name + " " + operand_text(in.args[0]) + ", " + in.target + ", " + in.alt;
    case Opcode::Jmp: return name + " " + in.target;
    case Opcode::Ret: return in.args.empty() ? name : name + " " + operand_text(in.args[0]);
    case Opcode::RoiBegin:
    case Opcode::RoiEnd:
    case Opcode::RoiEnter:
    case Opcode::RoiExit: return name + " " + quoted(in.roi);
    case Opcode::CtrInc:
      switch (in.inc) {
        case IncKind::One: return name + " " + std::to_string(in.index);
        case IncKind::Constant:
          return name + " " + std::to_string(in.index) + ", " + operand_text(in.args[0]);
        case IncKind::Trip:
          return name + " " + std::to_string(in.index) + ", trip " + operand_text(in.args[0]) +
                 ", " + std::to_string(in.trip_init) + ", " + std::to_string(in.trip_step);
      }
      return name;
    case Opcode::IszAdd:
      return name + " " + (in.array == SizeArray::Load ? "load" : "store") + ", " +
             std::to_string(in.index) + ", " + operand_text(in.args[0]);
  }
  return name;
}

std::string print_module(const Module& m) {
  std::ostringstream os;
  for (const auto& g : m.globals) os << "global @" << g.name << " " << g.size << "\n";
  for (const auto& e : m.externs) os << "extern @" << e << "\n";
  for (const auto& b : m.banks) {
    os << "bank " << quoted(b.roi) << " id " << b.id << " counters " << b.counters << " isz "
       << b.isz_slots << " period " << b.period << "\n";
    for (const auto& c : b.clones)
      os << "bank_clone " << quoted(b.roi) << " @" << c.function << " ctr " << c.ctr_base
         << " isz " << c.isz_base << "\n";
  }
  bool first = m.globals.empty() && m.externs.empty() && m.banks.empty();
  for (const auto& f : m.functions) {
    if (!first) os << "\n";
    first = false;
    os << "func @" << f.name << "(";
    for (std::size_t i = 0; i < f.params.size(); ++i) os << (i ? ", " : "") << f.params[i];
    os << ")";
    if (f.is_entry) os << " entry";
    if (f.is_clone) os << " clone";
    os << " {\n";
    for (const auto& b : f.blocks) {
      os << b.label << ":" << (b.synthetic ? " !synthetic" : "") << "\n";
      for (const auto& in : b.instrs) os << "  " << print_instr(in) << "\n";
    }
    os << "}\n";
  }
  return os.str();
}

std::uint64_t module_hash(const Module& m) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : print_module(m)) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace memroi
