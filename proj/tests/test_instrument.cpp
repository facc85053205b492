#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <set>

#include "fixtures.hpp"
#include "memroi/instrument.hpp"
#include "memroi/postprocess.hpp"

using namespace memroi;
using namespace memroi::testing;

namespace {

const RegionPlan& region(const InstrumentResult& r, std::string_view roi) {
  for (std::size_t i = 0; i < r.plan.rois.size(); ++i)
    if (r.plan.rois[i].name == roi) return r.plan.regions[i];
  throw std::runtime_error("no roi " + std::string(roi));
}

// Members of each counter set, as label sets.
std::set<std::set<std::string>> groups(const RegionPlan& p) {
  std::set<std::set<std::string>> out;
  for (const auto& s : p.sets) {
    std::set<std::string> g;
    for (const auto& m : s.members) g.insert(m.label);
    out.insert(g);
  }
  return out;
}

// Every region block sits in exactly one set's members.
void expect_partition(const RegionPlan& p, const std::string& what) {
  std::map<std::string, int> seen;
  for (const auto& s : p.sets)
    for (const auto& m : s.members) ++seen[m.label];
  // Synthetic preheaders carry no events and may sit in a set or not.
  std::size_t program_blocks = 0;
  for (const auto& b : p.blocks) {
    const bool synthetic = std::count(p.synthetic_blocks.begin(), p.synthetic_blocks.end(), b) > 0;
    program_blocks += !synthetic;
    EXPECT_EQ(seen.count(b) ? seen[b] : 0, synthetic ? seen.count(b) : 1) << what << " block " << b;
  }
  for (const auto& [label, n] : seen)
    EXPECT_TRUE(std::count(p.blocks.begin(), p.blocks.end(), label)) << what << " stray " << label;
  EXPECT_LE(p.counters(), program_blocks) << what;
  for (std::size_t i = 0; i < p.sets.size(); ++i) EXPECT_EQ(p.sets[i].counter_index, i) << what;
}

std::uint64_t count_ops(const Module& m, Opcode op) {
  std::uint64_t n = 0;
  for (const auto& f : m.functions)
    for (const auto& b : f.blocks)
      for (const auto& in : b.instrs) n += in.op == op;
  return n;
}

// Block execution counts along every entry-to-exit path of an acyclic region.
void enumerate_paths(const Function& f, const std::string& label, std::map<std::string, int> counts,
                     std::vector<std::map<std::string, int>>& out) {
  ++counts[label];
  const Block& b = *f.find_block(label);
  const auto succ = b.successors();
  if (succ.empty() || b.instrs.front().op == Opcode::RoiEnd) {
    out.push_back(counts);
    return;
  }
  for (const auto& s : succ) enumerate_paths(f, s, counts, out);
}

}  // namespace

TEST(FindRois, SplitsMidBlockMarkers) {
  Module m = parse_module(R"(func @main() {
e:
  const a, 1
  roi_begin "r"
  add b, a, 1
  roi_end "r"
  ret b
}
)");
  auto [out, rois] = find_rois(m);
  const Function& f = out.functions[0];
  ASSERT_EQ(f.blocks.size(), 3u);
  EXPECT_EQ(f.blocks[1].instrs.front().op, Opcode::RoiBegin);
  EXPECT_EQ(f.blocks[2].instrs.front().op, Opcode::RoiEnd);
  ASSERT_EQ(rois.size(), 1u);
  EXPECT_EQ(rois[0].start, f.blocks[1].label);
  EXPECT_EQ(rois[0].blocks, std::vector<std::string>{f.blocks[1].label});
  EXPECT_NO_THROW(validate(out));
}

TEST(FindRois, BlockAlignedMarkersAreLeftAlone) {
  Module m = parse_module(R"(func @main() {
e:
  jmp r
r:
  roi_begin "r"
  load v, heap, 4
  jmp x
x:
  roi_end "r"
  ret v
}
)");
  auto [out, rois] = find_rois(m);
  EXPECT_EQ(out, m);
  ASSERT_EQ(rois.size(), 1u);
  EXPECT_EQ(rois[0].blocks, std::vector<std::string>{"r"});
}

TEST(FindRois, TwoRoisAreDisjoint) {
  Module m = parse_module(R"(func @main(x) {
a:
  roi_begin "one"
  load v, heap, 4
  br x, b, c
b:
  store heap, 4
  jmp c
c:
  roi_end "one"
  roi_begin "two"
  fop
  roi_end "two"
  ret
}
)");
  auto [out, rois] = find_rois(m);
  ASSERT_EQ(rois.size(), 2u);
  EXPECT_EQ(rois[0].name, "one");
  EXPECT_EQ(rois[1].name, "two");
  std::set<std::string> first(rois[0].blocks.begin(), rois[0].blocks.end());
  for (const auto& b : rois[1].blocks) EXPECT_FALSE(first.count(b)) << b;
  EXPECT_EQ(first, (std::set<std::string>{"a", "b"}));
  EXPECT_EQ(rois[1].blocks.size(), 1u);
}

TEST(Partition, SideBlockSharesAWithC) {
  InstrumentResult r = instrument_module(load_fixture("sideblock.eir"), {});
  const RegionPlan& p = region(r, "sideblock");
  EXPECT_EQ(groups(p), (std::set<std::set<std::string>>{{"A", "C"}, {"B"}}));
  expect_partition(p, "sideblock");
}

TEST(Partition, ChainNeedsOneCounter) {
  InstrumentResult r = instrument_module(load_fixture("chain10.eir"), {});
  const RegionPlan& p = region(r, "chain");
  EXPECT_EQ(p.counters(), 1u);
  EXPECT_EQ(p.sets[0].members.size(), 10u);
}

TEST(Partition, DiamondMatchesCoExecutionClasses) {
  const Module m = load_fixture("diamond.eir");
  InstrumentResult r = instrument_module(m, {});
  const RegionPlan& p = region(r, "diamond");
  // Two blocks are control equivalent when they run equally often on every path.
  const Function& f = *r.baseline.find_function("main");
  std::vector<std::map<std::string, int>> paths;
  enumerate_paths(f, "A", {}, paths);
  ASSERT_EQ(paths.size(), 2u);
  std::map<std::vector<int>, std::set<std::string>> classes;
  for (const auto& b : p.blocks) {
    std::vector<int> sig;
    for (auto& path : paths) sig.push_back(path[b]);
    classes[sig].insert(b);
  }
  std::set<std::set<std::string>> expect;
  for (const auto& [sig, g] : classes) expect.insert(g);
  EXPECT_EQ(groups(p), expect);
  EXPECT_EQ(p.counters(), 3u);
}

TEST(Partition, NaiveUsesOneCounterPerBlock) {
  InstrumentOptions o;
  o.plan.naive = true;
  InstrumentResult r = instrument_module(load_fixture("chain10.eir"), o);
  EXPECT_EQ(region(r, "chain").counters(), 10u);
}

TEST(Partition, HoldsOnGeneratedPrograms) {
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    GenOptions go;
    go.seed = seed;
    go.profile = static_cast<GenProfile>(seed % 3);
    GenProgram g = generate(go);
    InstrumentResult r = instrument_text(g.text, gen_instrument_options(g));
    for (std::size_t i = 0; i < r.plan.rois.size(); ++i)
      expect_partition(r.plan.regions[i], "seed " + std::to_string(seed) + " " + r.plan.rois[i].name);
    for (const auto& [name, p] : r.plan.clones) expect_partition(p, "seed " + std::to_string(seed) + " " + name);
  }
}

TEST(Plan, LoopNestFoldsBothLoopsIntoOneCounter) {
  InstrumentResult r = instrument_module(load_fixture("loopnest.eir"), {});
  const RegionPlan& p = region(r, "loopnest");
  EXPECT_EQ(p.counters(), 1u);
  EXPECT_EQ(p.scale_of("obody"), 4u);
  EXPECT_EQ(p.scale_of("olatch"), 4u);
  EXPECT_EQ(p.scale_of("ibody"), 20u);
  EXPECT_EQ(p.scale_of("inner"), 24u);
  EXPECT_EQ(p.scale_of("outer"), 5u);
  ASSERT_EQ(p.hoists.size(), 2u);
  // The increment for the whole nest sits before the outer loop.
  EXPECT_EQ(p.sets[0].place, p.hoists[1].preheader);
  EXPECT_EQ(count_ops(r.instrumented, Opcode::CtrInc), 1u);
}

TEST(Plan, RuntimeLoopIncrementsByTripCount) {
  InstrumentResult r = instrument_module(load_fixture("runtime_loop.eir"), {});
  const RegionPlan& p = region(r, "rt");
  ASSERT_EQ(p.counters(), 2u);
  const PostDomSet* body = p.set_of("body");
  ASSERT_NE(body, nullptr);
  EXPECT_EQ(body->inc, IncKind::Trip);
  EXPECT_EQ(body->bound, "n");
  EXPECT_EQ(body->step, 2);
  EXPECT_NE(body->place, "body");
  ASSERT_EQ(p.hoists.size(), 1u);
  EXPECT_EQ(p.hoists[0].kind, TripCount::Kind::Runtime);
}

TEST(Plan, WithoutHoistingLoopBodiesCountThemselves) {
  InstrumentOptions o;
  o.plan.hoist = false;
  InstrumentResult r = instrument_module(load_fixture("loopnest.eir"), o);
  const RegionPlan& p = region(r, "loopnest");
  EXPECT_TRUE(p.hoists.empty());
  EXPECT_EQ(p.set_of("ibody")->place, "ibody");
  EXPECT_GT(p.counters(), 1u);
}

TEST(Plan, IrreducibleBlocksGetTheirOwnCounters) {
  InstrumentResult r = instrument_module(load_fixture("irreducible.eir"), {});
  const RegionPlan& p = region(r, "irr");
  EXPECT_EQ(p.counters(), 3u);
  EXPECT_EQ(p.set_of("L")->members.size(), 1u);
  EXPECT_EQ(p.set_of("R")->members.size(), 1u);
  int notes = 0;
  for (const auto& d : r.diagnostics) notes += d.message.find("irreducible") != std::string::npos;
  EXPECT_EQ(notes, 2);
}

TEST(Clone, SharedCalleeIsClonedOnceAndCountedPerRoi) {
  InstrumentResult r = instrument_module(load_fixture("shared_clone.eir"), {});
  ASSERT_EQ(r.plan.clones.size(), 1u);
  const std::string clone = clone_name("B");
  ASSERT_TRUE(r.plan.clones.count(clone));
  EXPECT_EQ(r.plan.clones.at(clone).counters(), 5u);
  for (const auto& roi : {"A", "C"}) {
    const BankDecl* bank = r.instrumented.find_bank(roi);
    ASSERT_NE(bank, nullptr);
    EXPECT_EQ(bank->counters, 6u);
    ASSERT_EQ(bank->clones.size(), 1u);
    EXPECT_EQ(bank->clones[0].function, clone);
  }
  // The clone is the only version called from inside the ROIs.
  const Function* main = r.instrumented.find_function("main");
  for (const auto& b : main->blocks)
    for (const auto& in : b.instrs)
      if (in.op == Opcode::Call) EXPECT_EQ(in.callee, clone);
  EXPECT_TRUE(r.instrumented.find_function(clone)->is_clone);
}

TEST(Clone, UncalledFunctionsAreNotCloned) {
  InstrumentResult r = instrument_text(R"(func @unused() {
e:
  ret
}
func @used() {
e:
  ret
}
func @main() entry {
e:
  call @unused()
  roi_begin "r"
  call @used()
  roi_end "r"
  ret
}
)");
  EXPECT_EQ(r.plan.clone_table, (std::map<std::string, std::string>{{"used", clone_name("used")}}));
  EXPECT_EQ(r.instrumented.find_function(clone_name("unused")), nullptr);
}

TEST(Clone, ExternAndIndirectCallsAreReported) {
  const char* text = R"(extern @x
func @t(p) {
e:
  load v, heap, 8
  ret v
}
func @main(s) entry {
e:
  roi_begin "r"
  call @x()
  icall s, [@t](s)
  roi_end "r"
  ret
}
)";
  InstrumentResult r = instrument_text(text);
  std::string all;
  for (const auto& d : r.diagnostics) all += d.message + "\n";
  EXPECT_NE(all.find("call to extern @x"), std::string::npos) << all;
  EXPECT_NE(all.find("uncovered indirect call"), std::string::npos) << all;
  EXPECT_EQ(r.mix.rois[0].uncovered_extern, 1u);
  EXPECT_EQ(r.mix.rois[0].uncovered_indirect, 1u);
  EXPECT_TRUE(r.plan.clones.empty());

  InstrumentOptions o;
  o.also_instrument = {"t"};
  InstrumentResult also = instrument_text(text, o);
  EXPECT_EQ(also.mix.rois[0].uncovered_indirect, 0u);
  EXPECT_TRUE(also.plan.clones.count(clone_name("t")));
}

TEST(Intrinsics, ConstantLengthsAreStatic) {
  Block b;
  b.instrs = {Instr::make_intrinsic(Opcode::Memset, Operand::of_imm(64)),
              Instr::make_intrinsic(Opcode::Memmove, Operand::of_imm(0)),
              Instr::make_intrinsic(Opcode::Memcpy, Operand::of_imm(20)), Instr::make_ret()};
  EventTally t = tally_of(b);
  EXPECT_EQ(t.bytes_written, 64u + 20u);
  EXPECT_EQ(t.bytes_read, 20u);
  EXPECT_EQ(t.stores, 8u + 3u);
  EXPECT_EQ(t.loads, 3u);
  EXPECT_EQ(t.intrinsics, 3u);
}

TEST(Intrinsics, RegisterLengthsGetSizeSlots) {
  InstrumentResult r = instrument_text(R"(func @main(n) entry {
e:
  roi_begin "r"
  memcpy n
  memset n
  roi_end "r"
  ret
}
)");
  EXPECT_EQ(region(r, "r").intrinsic_slots, 1u);
  std::vector<SizeArray> arrays;
  for (const auto& b : r.instrumented.find_function("main")->blocks)
    for (const auto& in : b.instrs)
      if (in.op == Opcode::IszAdd) arrays.push_back(in.array);
  std::sort(arrays.begin(), arrays.end());
  EXPECT_EQ(arrays, (std::vector<SizeArray>{SizeArray::Load, SizeArray::Store, SizeArray::Store}));
}

TEST(Sampling, PeriodLimitsEnabledExecutions) {
  const char* text = R"(func @main() entry {
e:
  const i, 0
  jmp h
h:
  cmplt c, i, 10000
  br c, b, x
b:
  roi_begin "r"
  load v, heap, 8
  roi_end "r"
  add i, i, 1
  jmp h
x:
  ret
}
)";
  InstrumentOptions o;
  o.period = 100;
  InstrumentResult r = instrument_text(text, o);
  EXPECT_EQ(r.mix.rois[0].period, 100u);
  RunArtifacts a = run(r.instrumented, {});
  const BankState* bank = a.dump.threads[0].find("r");
  EXPECT_EQ(bank->hits, 10000u);
  EXPECT_EQ(bank->enabled_execs, 100u);
}

TEST(StaticMix, SideBlockRecordIsTheSumOfItsBlocks) {
  InstrumentResult r = instrument_module(load_fixture("sideblock.eir"), {});
  const Function& f = *r.normalized.find_function("main");
  const RegionPlan& p = region(r, "sideblock");
  const RoiMix& mix = *r.mix.find("sideblock");
  ASSERT_EQ(mix.counters.size(), 2u);
  EventTally ac = tally_of(*f.find_block("A"));
  ac += tally_of(*f.find_block("C"));
  EXPECT_EQ(mix.counters[p.set_of("A")->counter_index], ac);
  EXPECT_EQ(mix.counters[p.set_of("B")->counter_index], tally_of(*f.find_block("B")));
  EXPECT_EQ(ac.loads, 1u);
  EXPECT_EQ(ac.stores, 1u);
  EXPECT_EQ(ac.bytes_read, 8u);
}

TEST(StaticMix, EmptyRoiHasNoCounters) {
  InstrumentResult r = instrument_text(R"(func @main() entry {
e:
  load v, heap, 8
  roi_begin "empty"
  roi_end "empty"
  ret
}
)");
  const RoiMix& mix = *r.mix.find("empty");
  EXPECT_TRUE(mix.counters.empty());
  RunArtifacts a = run(r.instrumented, {});
  const BankState* bank = a.dump.threads[0].find("empty");
  ASSERT_NE(bank, nullptr);
  EXPECT_TRUE(bank->counters.empty());
  EXPECT_TRUE(dynamic_mix(mix, *bank).empty());
}

TEST(Instrument, AlreadyInstrumentedModuleIsRejected) {
  InstrumentResult r = instrument_module(load_fixture("sideblock.eir"), {});
  EXPECT_THROW(instrument_module(r.instrumented, {}), Error);
  EXPECT_THROW(instrument_module(parse_module(print_module(r.instrumented)), {}), Error);
}

TEST(Instrument, ZeroPeriodIsRejected) {
  InstrumentOptions o;
  o.period = 0;
  EXPECT_THROW(instrument_module(load_fixture("sideblock.eir"), o), Error);
}

TEST(Instrument, OutputValidatesAndKeepsProgramBehaviour) {
  for (const auto& name : all_fixtures()) {
    SCOPED_TRACE(name);
    const Module m = load_fixture(name);
    InstrumentResult r = instrument_module(m, {});
    EXPECT_NO_THROW(validate(r.instrumented));
    RunOptions o;
    if (name == "bursty4.eir") o.threads = parse_thread_specs("main:1;main:0");
    else if (name == "shared_clone.eir") o.threads = parse_thread_specs("main:1;main:2");
    else o.threads = parse_thread_specs("main:" + std::string(m.entry_function()->params.empty() ? "" : "3"));
    RunArtifacts a = run(r.instrumented, o);
    ExactProfile ex = run_oracle(r.baseline, o);
    for (std::size_t t = 0; t < a.exit_codes.size(); ++t) EXPECT_EQ(a.exit_codes[t], ex.threads[t].exit_code);
  }
}
