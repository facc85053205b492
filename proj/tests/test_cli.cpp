#include <gtest/gtest.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <sstream>
#include <thread>

#include "fixtures.hpp"
#include "memroi/monitor.hpp"

using namespace memroi;
using namespace memroi::testing;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code = 0;
  std::string out;  // stdout and stderr interleaved
};

Result cli(const std::string& args) {
  const std::string cmd = std::string(MEMROI_CLI_PATH) + " " + args + " 2>&1";
  Result r;
  FILE* p = ::popen(cmd.c_str(), "r");
  if (!p) return {-1, "popen failed"};
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, p)) r.out.append(buf, n);
  const int status = ::pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("memroi_cli_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  for (std::string f; std::getline(ss, f, ',');) out.push_back(f);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

// Column `name` of the first data row.
std::string csv_field(const std::string& csv, const std::string& name) {
  std::istringstream in(csv);
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  auto h = split_csv(header), r = split_csv(row);
  for (std::size_t i = 0; i < h.size() && i < r.size(); ++i)
    if (h[i] == name) return r[i];
  return "<missing>";
}

}  // namespace

TEST_F(CliTest, Version) {
  Result r = cli("--version");
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "memroi 0.1.0\n");
}

TEST_F(CliTest, GenIsDeterministic) {
  Result a = cli("gen --seed 9 --profile loops");
  Result b = cli("gen --seed 9 --profile loops");
  ASSERT_EQ(a.code, 0) << a.out;
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(a.out.rfind("; memroi gen --seed 9 --profile loops\n", 0), 0u);
  EXPECT_NO_THROW(parse_module(a.out));
  EXPECT_NE(cli("gen --profile nope").code, 0);
}

TEST_F(CliTest, InstrumentRunReportMatchesTheOracle) {
  const std::string in = fixture_path("sideblock.eir");
  Result i = cli("instrument --in " + in + " --out " + path("f.eir") + " --mix " + path("f.mix"));
  ASSERT_EQ(i.code, 0) << i.out;
  Result r = cli("run --in " + path("f.eir") + " --dump " + path("f.dump") + " --input 0");
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("thread 0 exit 3"), std::string::npos) << r.out;
  Result p = cli("report --mix " + path("f.mix") + " --dump " + path("f.dump") + " --csv " + path("f.csv"));
  ASSERT_EQ(p.code, 0) << p.out;
  EXPECT_NE(p.out.find("ROI sideblock thread 0"), std::string::npos);

  InstrumentResult ir = instrument_module(load_fixture("sideblock.eir"), {});
  RunOptions o;
  o.threads = parse_thread_specs("main:0");
  const EventTally exact = run_oracle(ir.baseline, o).threads[0].rois.at("sideblock").events;
  const std::string csv = read_text_file(path("f.csv"));
  EXPECT_EQ(csv_field(csv, "load"), std::to_string(exact.loads));
  EXPECT_EQ(csv_field(csv, "store"), std::to_string(exact.stores));
  EXPECT_EQ(csv_field(csv, "bytes_read"), std::to_string(exact.bytes_read));
  EXPECT_EQ(csv_field(csv, "bytes_written"), std::to_string(exact.bytes_written));
  EXPECT_EQ(csv_field(csv, "instructions"), std::to_string(exact.instructions()));

  Result orc = cli("oracle --in " + in + " --input 0");
  ASSERT_EQ(orc.code, 0) << orc.out;
  EXPECT_NE(orc.out.find("bytes_r " + std::to_string(exact.bytes_read)), std::string::npos) << orc.out;
}

TEST_F(CliTest, DumpAnalysisPrintsThePlan) {
  Result r = cli("instrument --in " + fixture_path("loopnest.eir") + " --out " + path("o.eir") + " --mix " +
                 path("o.mix") + " --dump-analysis");
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("loop inner depth 2"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("roi loopnest in @main bank 0 counters 1"), std::string::npos) << r.out;
}

TEST_F(CliTest, SamePathTwiceIsRejected) {
  Result r = cli("instrument --in " + fixture_path("sideblock.eir") + " --out " + path("x") + " --mix " + path("x"));
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("name the same file"), std::string::npos) << r.out;
}

TEST_F(CliTest, RunWithoutMonitorFailsFastAndWritesNothing) {
  ASSERT_EQ(cli("instrument --in " + fixture_path("sideblock.eir") + " --out " + path("f.eir") + " --mix " +
                path("f.mix")).code, 0);
  const std::string sock = path("nobody.sock");
  Result r = cli("run --in " + path("f.eir") + " --dump " + path("f.dump") + " --input 0 --monitor unix:" + sock);
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("error: cannot connect to monitor at " + sock), std::string::npos) << r.out;
  EXPECT_FALSE(fs::exists(path("f.dump")));
}

TEST_F(CliTest, JsonDiagnostics) {
  fs::path bad = dir_ / "bad.eir";
  write_text_file(bad.string(), "func @main() {\ne:\n  load r, heap\n  ret\n}\n");
  Result r = cli("--json-diagnostics instrument --in " + bad.string() + " --out " + path("o") + " --mix " + path("m"));
  EXPECT_EQ(r.code, 1);
  const auto j = r.out.find('{');
  ASSERT_NE(j, std::string::npos) << r.out;
  const std::string json = r.out.substr(j);
  EXPECT_NE(json.find("\"command\":\"instrument\""), std::string::npos) << json;
  EXPECT_NE(json.find("\"ok\":false"), std::string::npos);
  EXPECT_NE(json.find("\"line\":3"), std::string::npos);
  EXPECT_NE(json.find("\"severity\":\"error\""), std::string::npos);

  Result ok = cli("--json-diagnostics instrument --in " + fixture_path("irreducible.eir") + " --out " + path("o") +
                  " --mix " + path("m"));
  EXPECT_EQ(ok.code, 0);
  EXPECT_NE(ok.out.find("\"ok\":true"), std::string::npos) << ok.out;
  EXPECT_NE(ok.out.find("\"severity\":\"note\""), std::string::npos) << ok.out;
}

TEST_F(CliTest, MonitorEndToEnd) {
  ASSERT_EQ(cli("instrument --in " + fixture_path("bursty4.eir") + " --out " + path("b.eir") + " --mix " +
                path("b.mix")).code, 0);
  const std::string sock = path("m.sock");
  Result mon;
  std::thread server([&] {
    mon = cli("monitor --addr unix:" + sock + " --mix " + path("b.mix") + " --period 20000 --csv " + path("e.csv"));
  });
  for (int i = 0; i < 500 && !fs::exists(sock); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(10));
  ASSERT_TRUE(fs::exists(sock));
  std::this_thread::sleep_for(std::chrono::milliseconds(50));
  Result r = cli("run --in " + path("b.eir") + " --dump " + path("b.dump") +
                 " --threads 'main:1;main:0' --monitor unix:" + sock);
  server.join();
  ASSERT_EQ(r.code, 0) << r.out;
  ASSERT_EQ(mon.code, 0) << mon.out;
  const std::string csv = read_text_file(path("e.csv"));
  EXPECT_EQ(csv.substr(0, csv.find('\n')), kEpochCsvHeader);
  EXPECT_GT(std::count(csv.begin(), csv.end(), '\n'), 10);
  EXPECT_TRUE(fs::exists(path("b.dump")));
}
