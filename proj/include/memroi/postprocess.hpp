#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "memroi/counters.hpp"
#include "memroi/events.hpp"
#include "memroi/mixfile.hpp"

namespace memroi {

// Static tallies times counter values, plus intrinsic slot bytes and their
// estimated 8-byte access operations.
EventTally dynamic_mix(const RoiMix& mix, const BankState& bank);

struct ThreadMix {
  std::uint32_t thread = 0;
  std::vector<std::pair<std::string, EventTally>> rois;  // mix order
};
// Checks the module hash and bank shapes, then reconstructs every bank.
std::vector<ThreadMix> dynamic_mix(const StaticMix& mix, const CounterDump& dump);

struct ProfileInputs {
  std::uint64_t instructions_executed = 0;
  std::uint64_t counter_increments = 0;
  std::uint64_t total_memory_accesses = 0;
  std::uint64_t bytes_read = 0;
  std::uint64_t bytes_written = 0;
  std::uint64_t roi_total_time = 0;
};

struct Correction {
  double omaf = 0;
  double nmaf = 0;
  double mf = 1;
  double cf = 1;
};

// incr_weight is the per-increment memory-access multiplier (2 by default).
Correction correction_factor(const ProfileInputs& p, double incr_weight = 2.0);

// Corrected bandwidth in bytes per cycle.
double bandwidth(std::uint64_t bytes, std::uint64_t time, double cf);

struct ReportConfig {
  std::optional<double> cycles_per_sec;
  double incr_weight = 2.0;
};

struct ReportRow {
  std::string roi;
  std::optional<std::uint32_t> thread;  // nullopt: aggregate over threads
  std::uint64_t hits = 0;
  std::uint64_t enabled_execs = 0;
  std::uint64_t period = 1;  // extrapolation factor, annotated only
  std::uint64_t time = 0;
  EventTally mix;
  std::uint64_t incr = 0;
  std::optional<Correction> correction;  // absent for an empty profile
  std::optional<double> read_bw, write_bw;  // bytes/cycle; absent when time is 0
  bool saturated = false;
  std::uint64_t uncovered_indirect = 0;
  std::uint64_t uncovered_extern = 0;
};

struct ProfileReport {
  std::vector<ReportRow> rows;
  std::optional<double> cycles_per_sec;

  std::string render_text() const;
  std::string render_csv() const;
};

ProfileReport report(const StaticMix& mix, const CounterDump& dump, const ReportConfig& cfg);

extern const char* const kReportCsvHeader;

}  // namespace memroi
