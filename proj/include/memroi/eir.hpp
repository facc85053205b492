#pragma once

// In-memory model of EIR, the small line-oriented control-flow IR that every
// analysis, transform and the VM operate on. See docs/eir.md for the grammar.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "memroi/diagnostics.hpp"

namespace memroi {

enum class Opcode : std::uint8_t {
  Const,
  Add,
  Sub,
  Mul,
  CmpLt,
  Fop,
  Load,
  Store,
  Memcpy,
  Memmove,
  Memset,
  Call,
  ICall,
  Br,
  Jmp,
  Ret,
  RoiBegin,
  RoiEnd,
  // Instrumentation pseudo-ops; never produced by a frontend.
  RoiEnter,
  RoiExit,
  CtrInc,
  IszAdd,
};

enum class Space : std::uint8_t { Heap, Global, Stack };

enum class EventClass : std::uint8_t {
  IntOp,
  FpOp,
  MemLoad,
  MemStore,
  Branch,
  Jump,
  Call,
  Return,
  Intrinsic,
};

// How much a ctr_inc adds: 1, a constant, or the runtime trip count of a
// counted loop `for (i = init; i < bound; i += step)`.
enum class IncKind : std::uint8_t { One, Constant, Trip };

// Which intrinsic size array an isz_add updates.
enum class SizeArray : std::uint8_t { Load, Store };

struct Operand {
  bool is_imm = false;
  std::int64_t imm = 0;
  std::string reg;

  static Operand of_reg(std::string name) { return Operand{false, 0, std::move(name)}; }
  static Operand of_imm(std::int64_t v) { return Operand{true, v, {}}; }

  bool operator==(const Operand&) const = default;
};

struct Instr {
  Opcode op = Opcode::Fop;
  std::string dst;                 // const/alu/cmplt/load, optional for call
  std::vector<Operand> args;       // see the per-opcode layout in eir.cpp
  std::vector<Operand> call_args;  // call / icall arguments
  Space space = Space::Heap;       // load/store
  std::uint8_t size = 0;           // load/store byte width
  std::string callee;              // call
  std::vector<std::string> table;  // icall candidates
  std::string target;              // jmp target, br taken target
  std::string alt;                 // br fallthrough target
  std::string roi;                 // ROI markers and roi_enter/roi_exit
  std::uint32_t index = 0;         // ctr_inc counter / isz_add slot
  IncKind inc = IncKind::One;
  std::int64_t trip_init = 0;
  std::int64_t trip_step = 1;
  SizeArray array = SizeArray::Load;

  bool operator==(const Instr&) const = default;

  bool is_terminator() const {
    return op == Opcode::Br || op == Opcode::Jmp || op == Opcode::Ret;
  }

  static Instr make_const(std::string dst, std::int64_t value);
  static Instr make_alu(Opcode op, std::string dst, Operand a, Operand b);
  static Instr make_fop();
  static Instr make_load(std::string dst, Space space, std::uint8_t size);
  static Instr make_store(Space space, std::uint8_t size);
  static Instr make_intrinsic(Opcode op, Operand length);
  static Instr make_call(std::string dst, std::string callee, std::vector<Operand> args);
  static Instr make_icall(std::string selector, std::vector<std::string> table,
                          std::vector<Operand> args);
  static Instr make_br(std::string cond, std::string if_true, std::string if_false);
  static Instr make_jmp(std::string target);
  static Instr make_ret(std::optional<Operand> value = std::nullopt);
  static Instr make_marker(Opcode op, std::string roi);
  static Instr make_ctr_inc(std::uint32_t index);
  static Instr make_ctr_add(std::uint32_t index, std::int64_t amount);
  static Instr make_ctr_trip(std::uint32_t index, std::string bound, std::int64_t init,
                             std::int64_t step);
  static Instr make_isz_add(SizeArray array, std::uint32_t slot, Operand length);
};

struct Block {
  std::string label;
  std::vector<Instr> instrs;  // the terminator is always the last entry
  bool synthetic = false;     // inserted by instrumentation; carries no program events

  const Instr& terminator() const { return instrs.back(); }
  Instr& terminator() { return instrs.back(); }
  std::vector<std::string> successors() const;

  bool operator==(const Block&) const = default;
};

struct Function {
  std::string name;  // without the leading '@'
  std::vector<std::string> params;
  std::vector<Block> blocks;  // blocks.front() is the entry block
  bool is_entry = false;
  bool is_clone = false;

  const Block& entry() const { return blocks.front(); }
  const Block* find_block(std::string_view label) const;
  Block* find_block(std::string_view label);
  int block_index(std::string_view label) const;  // -1 when absent

  bool operator==(const Function&) const = default;
};

struct Global {
  std::string name;
  std::uint64_t size = 0;
  bool operator==(const Global&) const = default;
};

// A clone's slice of one ROI's counter bank.
struct CloneRange {
  std::string function;
  std::uint32_t ctr_base = 0;
  std::uint32_t isz_base = 0;
  bool operator==(const CloneRange&) const = default;
};

// Per-ROI counter bank layout, present only in instrumented modules.
struct BankDecl {
  std::string roi;
  std::uint32_t id = 0;
  std::uint32_t counters = 0;
  std::uint32_t isz_slots = 0;
  std::uint64_t period = 1;
  std::vector<CloneRange> clones;

  const CloneRange* find_clone(std::string_view fn) const;
  bool operator==(const BankDecl&) const = default;
};

struct Module {
  std::vector<Global> globals;
  std::vector<std::string> externs;
  std::vector<BankDecl> banks;
  std::vector<Function> functions;

  const Function* find_function(std::string_view name) const;
  Function* find_function(std::string_view name);
  bool is_extern(std::string_view name) const;
  const BankDecl* find_bank(std::string_view roi) const;
  // The function marked `entry`, else @main, else nullptr.
  const Function* entry_function() const;

  bool operator==(const Module&) const = default;
};

// Event class of a program instruction; nullopt for ROI markers and
// instrumentation pseudo-ops.
std::optional<EventClass> event_class(const Instr& in);
bool is_instrumentation(Opcode op);
bool is_intrinsic(Opcode op);
std::string_view opcode_name(Opcode op);
std::string_view space_name(Space s);

// Parses and validates. Throws Error with positioned diagnostics.
Module parse_module(std::string_view text);
// Parses without running validate(); syntax errors still throw.
Module parse_module_unchecked(std::string_view text);

// All structural diagnostics for `m`; empty when valid.
std::vector<Diagnostic> check_module(const Module& m);
// Throws Error carrying check_module's diagnostics when any are errors.
void validate(const Module& m);

// ROI active at the entry of each block, indexed like f.blocks: empty string
// for "outside", nullopt for blocks unreachable from the entry. Throws when a
// join sees two different states or markers are misused.
std::vector<std::optional<std::string>> roi_entry_states(const Function& f);

std::string print_module(const Module& m);
std::string print_instr(const Instr& in);

// FNV-1a 64 over the canonical text; ties mix files and dumps to a module.
std::uint64_t module_hash(const Module& m);
std::string hash_hex(std::uint64_t h);

}  // namespace memroi
