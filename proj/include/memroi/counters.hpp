#pragma once

// Runtime counter state: per-thread banks, the counter dump file, and the
// handshake/snapshot records streamed to a live monitor.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace memroi {

// One ROI's bank as owned by one simulated thread.
struct BankState {
  std::string roi;
  std::uint64_t hits = 0;
  std::uint64_t enabled_execs = 0;
  std::uint64_t time = 0;  // cycles inside enabled executions
  std::uint64_t incr = 0;  // enabled ctr_inc / isz_add executions
  bool saturated = false;
  std::vector<std::uint64_t> counters;
  std::vector<std::uint64_t> isz_load;
  std::vector<std::uint64_t> isz_store;

  bool operator==(const BankState&) const = default;
};

struct ThreadBanks {
  std::uint32_t thread = 0;
  std::vector<BankState> banks;  // ordered by bank id

  const BankState* find(std::string_view roi) const;
  bool operator==(const ThreadBanks&) const = default;
};

struct CounterDump {
  std::uint64_t module_hash = 0;
  std::vector<ThreadBanks> threads;

  bool operator==(const CounterDump&) const = default;
};

std::string write_dump(const CounterDump& d);
CounterDump read_dump(std::string_view text);

struct RoiDescriptorWire {
  std::string name;
  std::uint32_t bank_size = 0;
  std::uint32_t isz_slots = 0;
  std::uint64_t period = 1;
  bool operator==(const RoiDescriptorWire&) const = default;
};

struct ThreadDescriptor {
  std::uint32_t thread = 0;
  std::vector<RoiDescriptorWire> rois;
  bool operator==(const ThreadDescriptor&) const = default;
};

struct Handshake {
  std::uint16_t version = 1;
  std::uint64_t module_hash = 0;
  std::vector<ThreadDescriptor> threads;
  bool operator==(const Handshake&) const = default;
};

struct Snapshot {
  std::uint64_t id = 0;
  std::uint64_t vtime = 0;
  bool final = false;
  std::vector<ThreadBanks> threads;
  bool operator==(const Snapshot&) const = default;
};

// Receives a run's handshake and snapshots. begin() returns the requested
// snapshot spacing in virtual cycles; 0 asks for the final snapshot only.
class SnapshotSink {
 public:
  virtual ~SnapshotSink() = default;
  virtual std::uint64_t begin(const Handshake& h) = 0;
  virtual void snapshot(const Snapshot& s) = 0;
};

}  // namespace memroi
