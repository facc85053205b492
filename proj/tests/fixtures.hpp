#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "memroi/gen.hpp"
#include "memroi/instrument.hpp"
#include "memroi/pipeline.hpp"
#include "memroi/vm.hpp"

namespace memroi::testing {

std::string fixture_path(std::string_view name);
std::string fixture_text(std::string_view name);
Module load_fixture(std::string_view name);
std::vector<std::string> all_fixtures();

InstrumentOptions gen_instrument_options(const GenProgram& g, std::uint64_t period = 1);
RunOptions gen_run_options(const GenProgram& g);
InstrumentResult instrument_text(std::string_view text, const InstrumentOptions& opts = {});

// Whole-run cycles of the module with its ROI markers treated as no-ops.
std::uint64_t plain_cycles(const Module& m, const RunOptions& opts = {});

// Sum of one bank's counters, intrinsic slots and bookkeeping over threads.
std::uint64_t bank_total(const CounterDump& d, std::string_view roi);

}  // namespace memroi::testing
