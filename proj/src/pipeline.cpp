#include "memroi/pipeline.hpp"

#include <fstream>
#include <sstream>

#include "memroi/diagnostics.hpp"

namespace memroi {

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path + " for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path + " for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error("write to " + path + " failed");
}

Module load_module(const std::string& path) { return parse_module(read_text_file(path)); }

std::string describe_tally(const EventTally& t) {
  std::ostringstream os;
  os << "int " << t.int_ops << " fp " << t.fp_ops << " load " << t.loads << " store " << t.stores << " branch "
     << t.branches << " jump " << t.jumps << " call " << t.calls << " ret " << t.rets << " intrinsic "
     << t.intrinsics << " stack_ops " << t.stack_ops << " bytes_r " << t.bytes_read << " bytes_w "
     << t.bytes_written;
  return os.str();
}

std::vector<MixPair> reconstructed_mixes(const StaticMix& mix, const CounterDump& dump) {
  std::vector<MixPair> out;
  for (const auto& tm : dynamic_mix(mix, dump)) {
    for (const auto& [roi, tally] : tm.rois) {
      MixPair p;
      p.thread = tm.thread;
      p.roi = roi;
      p.reconstructed = tally;
      out.push_back(std::move(p));
    }
  }
  return out;
}

bool OracleCheck::exact() const {
  for (const auto& p : pairs)
    if (!p.equal()) return false;
  return true;
}

std::string OracleCheck::mismatches() const {
  std::ostringstream os;
  for (const auto& p : pairs) {
    if (p.equal()) continue;
    os << "thread " << p.thread << " roi " << p.roi << "\n  reconstructed: " << describe_tally(p.reconstructed)
       << "\n  exact:         " << describe_tally(p.exact) << "\n";
  }
  return os.str();
}

OracleCheck check_against_oracle(const InstrumentResult& r, const RunOptions& opts) {
  OracleCheck c;
  RunOptions ro = opts;
  ro.sink = nullptr;
  c.instrumented_run = run(r.instrumented, ro);
  c.oracle = run_oracle(r.baseline, ro);
  c.pairs = reconstructed_mixes(r.mix, c.instrumented_run.dump);
  for (auto& p : c.pairs) {
    if (p.thread >= c.oracle.threads.size()) throw Error("oracle has no thread " + std::to_string(p.thread));
    const auto& rois = c.oracle.threads[p.thread].rois;
    if (auto it = rois.find(p.roi); it != rois.end()) p.exact = it->second.events;
  }
  return c;
}

}  // namespace memroi
