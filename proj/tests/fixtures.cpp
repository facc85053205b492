#include "fixtures.hpp"

#include <algorithm>
#include <filesystem>

namespace memroi::testing {

std::string fixture_path(std::string_view name) { return std::string(MEMROI_FIXTURE_DIR) + "/" + std::string(name); }

std::string fixture_text(std::string_view name) { return read_text_file(fixture_path(name)); }

Module load_fixture(std::string_view name) { return parse_module(fixture_text(name)); }

std::vector<std::string> all_fixtures() {
  std::vector<std::string> out;
  for (const auto& e : std::filesystem::directory_iterator(MEMROI_FIXTURE_DIR))
    if (e.path().extension() == ".eir") out.push_back(e.path().filename().string());
  std::sort(out.begin(), out.end());
  return out;
}

InstrumentOptions gen_instrument_options(const GenProgram& g, std::uint64_t period) {
  InstrumentOptions o;
  o.period = period;
  o.also_instrument = g.also_instrument;
  return o;
}

RunOptions gen_run_options(const GenProgram& g) {
  RunOptions o;
  o.threads = {ThreadSpec{"", g.inputs}};
  return o;
}

InstrumentResult instrument_text(std::string_view text, const InstrumentOptions& opts) {
  return instrument_module(parse_module(text), opts);
}

std::uint64_t plain_cycles(const Module& m, const RunOptions& opts) {
  RunOptions o = opts;
  o.sink = nullptr;
  return run(m, o).total_cycles;
}

std::uint64_t bank_total(const CounterDump& d, std::string_view roi) {
  std::uint64_t sum = 0;
  for (const auto& t : d.threads) {
    for (const auto& b : t.banks) {
      if (b.roi != roi) continue;
      sum += b.hits + b.enabled_execs + b.time + b.incr;
      for (auto v : b.counters) sum += v;
      for (auto v : b.isz_load) sum += v;
      for (auto v : b.isz_store) sum += v;
    }
  }
  return sum;
}

}  // namespace memroi::testing
