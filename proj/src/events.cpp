#include "memroi/events.hpp"

#include <limits>

namespace memroi {

std::uint64_t saturating_add(std::uint64_t a, std::uint64_t b) {
  std::uint64_t r = a + b;
  return r < a ? std::numeric_limits<std::uint64_t>::max() : r;
}

std::uint64_t saturating_mul(std::uint64_t a, std::uint64_t b) {
  std::uint64_t r = 0;
  if (__builtin_mul_overflow(a, b, &r)) return std::numeric_limits<std::uint64_t>::max();
  return r;
}

EventTally& EventTally::operator+=(const EventTally& o) {
  int_ops = saturating_add(int_ops, o.int_ops);
  fp_ops = saturating_add(fp_ops, o.fp_ops);
  loads = saturating_add(loads, o.loads);
  stores = saturating_add(stores, o.stores);
  branches = saturating_add(branches, o.branches);
  jumps = saturating_add(jumps, o.jumps);
  calls = saturating_add(calls, o.calls);
  rets = saturating_add(rets, o.rets);
  intrinsics = saturating_add(intrinsics, o.intrinsics);
  stack_ops = saturating_add(stack_ops, o.stack_ops);
  bytes_read = saturating_add(bytes_read, o.bytes_read);
  bytes_written = saturating_add(bytes_written, o.bytes_written);
  return *this;
}

EventTally EventTally::scaled(std::uint64_t k) const {
  EventTally t;
  t.int_ops = saturating_mul(int_ops, k);
  t.fp_ops = saturating_mul(fp_ops, k);
  t.loads = saturating_mul(loads, k);
  t.stores = saturating_mul(stores, k);
  t.branches = saturating_mul(branches, k);
  t.jumps = saturating_mul(jumps, k);
  t.calls = saturating_mul(calls, k);
  t.rets = saturating_mul(rets, k);
  t.intrinsics = saturating_mul(intrinsics, k);
  t.stack_ops = saturating_mul(stack_ops, k);
  t.bytes_read = saturating_mul(bytes_read, k);
  t.bytes_written = saturating_mul(bytes_written, k);
  return t;
}

std::uint64_t EventTally::instructions() const {
  std::uint64_t n = 0;
  for (std::uint64_t v : {int_ops, fp_ops, loads, stores, stack_ops, branches, jumps, calls, rets, intrinsics})
    n = saturating_add(n, v);
  return n;
}

void add_intrinsic_bytes(EventTally& t, Opcode op, std::uint64_t bytes) {
  const std::uint64_t ops = intrinsic_ops(bytes);
  if (op == Opcode::Memcpy || op == Opcode::Memmove) {
    t.bytes_read = saturating_add(t.bytes_read, bytes);
    t.loads = saturating_add(t.loads, ops);
  }
  t.bytes_written = saturating_add(t.bytes_written, bytes);
  t.stores = saturating_add(t.stores, ops);
}

EventTally tally_of(const Instr& in) {
  EventTally t;
  auto cls = event_class(in);
  if (!cls) return t;
  switch (*cls) {
    case EventClass::IntOp: t.int_ops = 1; break;
    case EventClass::FpOp: t.fp_ops = 1; break;
    case EventClass::MemLoad:
      if (in.space == Space::Stack) {
        t.stack_ops = 1;
      } else {
        t.loads = 1;
        t.bytes_read = in.size;
      }
      break;
    case EventClass::MemStore:
      if (in.space == Space::Stack) {
        t.stack_ops = 1;
      } else {
        t.stores = 1;
        t.bytes_written = in.size;
      }
      break;
    case EventClass::Branch: t.branches = 1; break;
    case EventClass::Jump: t.jumps = 1; break;
    case EventClass::Call: t.calls = 1; break;
    case EventClass::Return: t.rets = 1; break;
    case EventClass::Intrinsic:
      t.intrinsics = 1;
      if (in.args[0].is_imm) add_intrinsic_bytes(t, in.op, static_cast<std::uint64_t>(in.args[0].imm));
      break;
  }
  return t;
}

EventTally tally_of(const Block& b) {
  EventTally t;
  if (b.synthetic) return t;
  for (const auto& in : b.instrs) t += tally_of(in);
  return t;
}

}  // namespace memroi
