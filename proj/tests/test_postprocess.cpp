#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "memroi/postprocess.hpp"

using namespace memroi;
using namespace memroi::testing;

namespace {

ProfileInputs inputs(std::uint64_t instr, std::uint64_t incr, std::uint64_t mem) {
  ProfileInputs p;
  p.instructions_executed = instr;
  p.counter_increments = incr;
  p.total_memory_accesses = mem;
  return p;
}

std::string error_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Correction, NoIncrementsIsIdentity) {
  Correction c = correction_factor(inputs(500, 0, 120));
  EXPECT_DOUBLE_EQ(c.omaf, c.nmaf);
  EXPECT_DOUBLE_EQ(c.mf, 1.0);
  EXPECT_DOUBLE_EQ(c.cf, 1.0);
}

TEST(Correction, WorkedExample) {
  Correction c = correction_factor(inputs(1000, 50, 200));
  // By hand: NMAF = 300/1100 = 3/11, MF = (3/11)/(1/5) = 15/11, CF = 1 + 50*15/11/1000 = 1 + 3/44.
  EXPECT_NEAR(c.omaf, 0.2, 1e-6);
  EXPECT_NEAR(c.nmaf, 3.0 / 11.0, 1e-12);
  EXPECT_NEAR(c.mf, 15.0 / 11.0, 1e-12);
  EXPECT_NEAR(c.cf, 1.0 + 3.0 / 44.0, 1e-12);
  EXPECT_NEAR(c.nmaf, 0.272727, 5e-7);
  EXPECT_NEAR(c.mf, 1.363636, 5e-7);
  EXPECT_NEAR(c.cf, 1.068182, 5e-7);
}

TEST(Correction, NoMemoryAccessesUsesUnitFactor) {
  Correction c = correction_factor(inputs(100, 10, 0));
  EXPECT_DOUBLE_EQ(c.omaf, 0.0);
  EXPECT_DOUBLE_EQ(c.mf, 1.0);
  EXPECT_NEAR(c.cf, 1.1, 1e-12);
}

TEST(Correction, EmptyProfileIsAnError) {
  EXPECT_EQ(error_of([] { correction_factor(inputs(0, 3, 0)); }), "error: empty ROI profile");
}

TEST(Correction, WeightScalesIncrementCost) {
  Correction two = correction_factor(inputs(1000, 50, 200), 2.0);
  Correction four = correction_factor(inputs(1000, 50, 200), 4.0);
  EXPECT_NEAR(four.nmaf, 400.0 / 1200.0, 1e-12);
  EXPECT_GT(four.cf, two.cf);
}

TEST(Correction, IncreasesStrictlyWithIncrements) {
  double prev = 1.0;
  for (std::uint64_t incr = 1; incr <= 100; ++incr) {
    Correction c = correction_factor(inputs(1000, incr, 200));
    EXPECT_GT(c.cf, prev) << incr;
    prev = c.cf;
  }
}

TEST(Correction, NewFractionExceedsOriginal) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 2000; ++i) {
    const std::uint64_t instr = 1 + rng() % 100000;
    const std::uint64_t mem = 1 + rng() % instr;
    const std::uint64_t incr = 1 + rng() % 50000;
    if (mem >= instr) continue;
    Correction c = correction_factor(inputs(instr, incr, mem));
    EXPECT_GT(c.nmaf, c.omaf);
    EXPECT_GT(c.mf, 1.0);
    EXPECT_GT(c.cf, 1.0 + static_cast<double>(incr) / static_cast<double>(instr));
  }
}

TEST(Bandwidth, Examples) {
  EXPECT_DOUBLE_EQ(bandwidth(0, 100, 1.3), 0.0);
  EXPECT_NEAR(bandwidth(1'000'000, 1'000'000, 1.1), 1.1, 1e-12);
  EXPECT_EQ(error_of([] { bandwidth(10, 0, 1.0); }), "error: zero ROI time");
}

TEST(DynamicMix, ZeroCountersGiveAnEmptyMix) {
  InstrumentResult r = instrument_module(load_fixture("sideblock.eir"), {});
  const RoiMix& mix = *r.mix.find("sideblock");
  BankState b;
  b.roi = "sideblock";
  b.counters.assign(mix.counters.size(), 0);
  EXPECT_TRUE(dynamic_mix(mix, b).empty());
}

TEST(DynamicMix, TakenSidePathSumsAllThreeBlocks) {
  InstrumentResult r = instrument_module(load_fixture("sideblock.eir"), {});
  RunOptions o;
  o.threads = parse_thread_specs("main:0");
  RunArtifacts a = run(r.instrumented, o);
  const BankState& b = *a.dump.threads[0].find("sideblock");
  EXPECT_EQ(b.counters, (std::vector<std::uint64_t>{1, 1}));
  const Function& f = *r.normalized.find_function("main");
  EventTally expect = tally_of(*f.find_block("A"));
  expect += tally_of(*f.find_block("B"));
  expect += tally_of(*f.find_block("C"));
  EXPECT_EQ(dynamic_mix(*r.mix.find("sideblock"), b), expect);
  EXPECT_EQ(run_oracle(r.baseline, o).threads[0].rois.at("sideblock").events, expect);
}

TEST(DynamicMix, SizeSlotBytesBecomeOperations) {
  RoiMix mix;
  mix.name = "r";
  mix.intrinsic_slots = 1;
  BankState b;
  b.roi = "r";
  b.isz_load = {24};
  b.isz_store = {0};
  EventTally t = dynamic_mix(mix, b);
  EXPECT_EQ(t.bytes_read, 24u);
  EXPECT_EQ(t.loads, 3u);
  b.isz_store = {9};
  EXPECT_EQ(dynamic_mix(mix, b).stores, 2u);
}

TEST(DynamicMix, ShapeAndHashMismatchesAreErrors) {
  InstrumentResult r = instrument_module(load_fixture("sideblock.eir"), {});
  RunArtifacts a = run(r.instrumented, {});
  CounterDump d = a.dump;
  d.module_hash ^= 1;
  EXPECT_NE(error_of([&] { dynamic_mix(r.mix, d); }).find("module hash mismatch"), std::string::npos);
  BankState b = *a.dump.threads[0].find("sideblock");
  b.counters.push_back(0);
  EXPECT_NE(error_of([&] { dynamic_mix(*r.mix.find("sideblock"), b); }).find("3 counters"), std::string::npos);
}

TEST(Report, SingleThreadHasOneRowAndNoAggregate) {
  InstrumentResult r = instrument_module(load_fixture("loopnest.eir"), {});
  RunArtifacts a = run(r.instrumented, {});
  ProfileReport rep = report(r.mix, a.dump, {});
  ASSERT_EQ(rep.rows.size(), 1u);
  const ReportRow& row = rep.rows[0];
  EXPECT_EQ(row.thread, 0u);
  EXPECT_EQ(row.mix, run_oracle(r.baseline, {}).threads[0].rois.at("loopnest").events);
  EXPECT_EQ(row.incr, 1u);
  ASSERT_TRUE(row.correction);
  EXPECT_LT(row.correction->cf, 1.01);
  ASSERT_TRUE(row.read_bw);
  EXPECT_NEAR(*row.read_bw, row.correction->cf * row.mix.bytes_read / static_cast<double>(row.time), 1e-12);
}

TEST(Report, AggregateSumsBytesOverTime) {
  InstrumentResult r = instrument_module(load_fixture("sideblock.eir"), {});
  RunOptions o;
  o.threads = parse_thread_specs("main:0;main:5");
  RunArtifacts a = run(r.instrumented, o);
  ProfileReport rep = report(r.mix, a.dump, {});
  ASSERT_EQ(rep.rows.size(), 3u);
  const ReportRow& agg = rep.rows[2];
  EXPECT_FALSE(agg.thread);
  EXPECT_EQ(agg.time, rep.rows[0].time + rep.rows[1].time);
  EXPECT_EQ(agg.mix.bytes_read, rep.rows[0].mix.bytes_read + rep.rows[1].mix.bytes_read);
  EXPECT_NEAR(*agg.read_bw, agg.correction->cf * agg.mix.bytes_read / static_cast<double>(agg.time), 1e-12);
}

TEST(Report, SamplingPeriodIsAnnotatedNotApplied) {
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
  InstrumentOptions io;
  io.period = 100;
  InstrumentResult r = instrument_text(text, io);
  RunArtifacts a = run(r.instrumented, {});
  ProfileReport rep = report(r.mix, a.dump, {});
  EXPECT_EQ(rep.rows[0].period, 100u);
  EXPECT_EQ(rep.rows[0].enabled_execs, 100u);
  EXPECT_EQ(rep.rows[0].mix.loads, 100u);
  EXPECT_NE(rep.render_text().find("100"), std::string::npos);
}

TEST(Report, CsvHasTheFixedHeaderAndOneLinePerRow) {
  InstrumentResult r = instrument_module(load_fixture("shared_clone.eir"), {});
  RunOptions o;
  o.threads = parse_thread_specs("main:1");
  RunArtifacts a = run(r.instrumented, o);
  ReportConfig cfg;
  cfg.cycles_per_sec = 2e9;
  ProfileReport rep = report(r.mix, a.dump, cfg);
  const std::string csv = rep.render_csv();
  EXPECT_EQ(csv.substr(0, csv.find('\n')), kReportCsvHeader);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + static_cast<long>(rep.rows.size()));
  const auto columns = std::count(std::string_view(kReportCsvHeader).begin(), std::string_view(kReportCsvHeader).end(), ',');
  std::size_t pos = csv.find('\n') + 1;
  while (pos < csv.size()) {
    const std::size_t end = csv.find('\n', pos);
    const std::string line = csv.substr(pos, end - pos);
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), columns) << line;
    pos = end + 1;
  }
  // ROI C never ran: no profile, so no correction or bandwidth.
  const ReportRow& c = rep.rows[1];
  EXPECT_EQ(c.roi, "C");
  EXPECT_FALSE(c.correction);
  EXPECT_FALSE(c.read_bw);
}

TEST(Files, MixRoundTrip) {
  for (const auto& name : all_fixtures()) {
    InstrumentResult r = instrument_module(load_fixture(name), {});
    const std::string text = write_mix(r.mix);
    EXPECT_EQ(read_mix(text), r.mix) << name;
    EXPECT_EQ(write_mix(read_mix(text)), text) << name;
  }
}

TEST(Files, DumpRoundTrip) {
  InstrumentResult r = instrument_module(load_fixture("shared_clone.eir"), {});
  RunOptions o;
  o.threads = parse_thread_specs("main:1;main:2");
  RunArtifacts a = run(r.instrumented, o);
  const std::string text = write_dump(a.dump);
  EXPECT_EQ(read_dump(text), a.dump);
  EXPECT_EQ(write_dump(read_dump(text)), text);
}

TEST(Files, MalformedInputsAreRejected) {
  EXPECT_THROW(read_mix("module zz\n"), Error);
  EXPECT_THROW(read_mix("module 0000000000000001\nctr 0 int 1\n"), Error);
  EXPECT_THROW(read_dump("module 0000000000000001\nroi r hits 1\n"), Error);
  EXPECT_THROW(read_dump("garbage\n"), Error);
}
