#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "memroi/counters.hpp"
#include "memroi/mixfile.hpp"
#include "memroi/postprocess.hpp"
#include "memroi/transport.hpp"

namespace memroi {

// VM side: streams the handshake and snapshots over a channel. If the
// monitor goes away the run continues and later snapshots are dropped.
class StreamSink : public SnapshotSink {
 public:
  explicit StreamSink(Channel& ch) : ch_(ch) {}
  std::uint64_t begin(const Handshake& h) override;
  void snapshot(const Snapshot& s) override;
  bool disconnected() const { return closed_; }

 private:
  Channel& ch_;
  bool closed_ = false;
};

// Monitor side of one run.
struct MonitorSession {
  Handshake handshake;
  std::vector<Snapshot> snapshots;
  bool partial = false;  // the stream ended before the final snapshot
};

// Reads the handshake, checks it against `mix` when given, requests
// snapshots every `period` virtual cycles and collects them until the final one.
MonitorSession serve(Channel& ch, std::uint64_t period, const StaticMix* mix);

struct EpochStats {
  std::uint64_t epoch = 0;  // 1-based; epoch k spans snapshots k-1 and k
  std::uint64_t snapshot_id = 0;
  std::uint64_t vtime = 0;
  std::uint32_t thread = 0;
  std::string roi;
  BankState delta;  // counter-wise differences, clamped at 0
  EventTally mix;
  std::optional<Correction> correction;
  double read_bw = 0;  // bytes/cycle, CF corrected; 0 when no time elapsed
  double write_bw = 0;
  bool saturated = false;
  bool partial = false;
};

std::vector<EpochStats> epoch_stats(const MonitorSession& session, const StaticMix& mix,
                                    const ReportConfig& cfg = {});
std::string render_epoch_csv(const std::vector<EpochStats>& epochs);

extern const char* const kEpochCsvHeader;

}  // namespace memroi
