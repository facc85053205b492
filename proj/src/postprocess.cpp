#include "memroi/postprocess.hpp"

#include <cstdio>
#include <sstream>

#include "memroi/diagnostics.hpp"
#include "memroi/eir.hpp"

namespace memroi {

const char* const kReportCsvHeader =
    "roi,thread,hits,enabled_execs,period,time_cycles,instructions,int,fp,load,store,stack_ops,"
    "branch,jump,call,ret,intrinsic,bytes_read,bytes_written,counter_incr,omaf,nmaf,mf,cf,"
    "read_bw_bpc,write_bw_bpc,read_bw_bps,write_bw_bps,saturated,uncovered_indirect,"
    "uncovered_extern";

EventTally dynamic_mix(const RoiMix& mix, const BankState& bank) {
  if (bank.counters.size() != mix.counters.size())
    throw Error("ROI " + mix.name + ": dump has " + std::to_string(bank.counters.size()) +
                " counters but the mix file has " + std::to_string(mix.counters.size()));
  if (bank.isz_load.size() != mix.intrinsic_slots || bank.isz_store.size() != mix.intrinsic_slots)
    throw Error("ROI " + mix.name + ": intrinsic slot count differs between dump and mix file");
  EventTally t;
  for (std::size_t i = 0; i < mix.counters.size(); ++i) t += mix.counters[i].scaled(bank.counters[i]);
  for (std::uint64_t b : bank.isz_load) {
    t.bytes_read = saturating_add(t.bytes_read, b);
    t.loads = saturating_add(t.loads, intrinsic_ops(b));
  }
  for (std::uint64_t b : bank.isz_store) {
    t.bytes_written = saturating_add(t.bytes_written, b);
    t.stores = saturating_add(t.stores, intrinsic_ops(b));
  }
  return t;
}

std::vector<ThreadMix> dynamic_mix(const StaticMix& mix, const CounterDump& dump) {
  if (mix.module_hash != dump.module_hash)
    throw Error("module hash mismatch: mix file is for " + hash_hex(mix.module_hash) + ", dump is for " +
                hash_hex(dump.module_hash));
  std::vector<ThreadMix> out;
  for (const auto& t : dump.threads) {
    for (const auto& b : t.banks)
      if (!mix.find(b.roi)) throw Error("dump names ROI " + b.roi + " which the mix file does not describe");
    ThreadMix tm;
    tm.thread = t.thread;
    for (const auto& r : mix.rois) {
      const BankState* b = t.find(r.name);
      if (!b) throw Error("dump for thread " + std::to_string(t.thread) + " lacks ROI " + r.name);
      tm.rois.push_back({r.name, dynamic_mix(r, *b)});
    }
    out.push_back(std::move(tm));
  }
  return out;
}

Correction correction_factor(const ProfileInputs& p, double incr_weight) {
  if (p.instructions_executed == 0) throw Error("empty ROI profile");
  const double instr = static_cast<double>(p.instructions_executed);
  const double mem = static_cast<double>(p.total_memory_accesses);
  const double incr = static_cast<double>(p.counter_increments);
  Correction c;
  c.omaf = mem / instr;
  c.nmaf = (incr_weight * incr + mem) / (incr_weight * incr + instr);
  c.mf = c.omaf == 0 ? 1.0 : c.nmaf / c.omaf;
  c.cf = (instr + incr * c.mf) / instr;
  return c;
}

double bandwidth(std::uint64_t bytes, std::uint64_t time, double cf) {
  if (time == 0) throw Error("zero ROI time");
  return cf * static_cast<double>(bytes) / static_cast<double>(time);
}

namespace {

void finish_row(ReportRow& r, const ReportConfig& cfg) {
  if (r.mix.instructions() > 0) {
    ProfileInputs p;
    p.instructions_executed = r.mix.instructions();
    p.counter_increments = r.incr;
    p.total_memory_accesses = r.mix.memory_accesses();
    p.bytes_read = r.mix.bytes_read;
    p.bytes_written = r.mix.bytes_written;
    p.roi_total_time = r.time;
    r.correction = correction_factor(p, cfg.incr_weight);
    if (r.time > 0) {
      r.read_bw = bandwidth(r.mix.bytes_read, r.time, r.correction->cf);
      r.write_bw = bandwidth(r.mix.bytes_written, r.time, r.correction->cf);
    }
  }
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string opt(const std::optional<double>& v, double scale = 1.0) {
  return v ? fmt_double(*v * scale) : std::string();
}

}  // namespace

ProfileReport report(const StaticMix& mix, const CounterDump& dump, const ReportConfig& cfg) {
  ProfileReport rep;
  rep.cycles_per_sec = cfg.cycles_per_sec;
  auto mixes = dynamic_mix(mix, dump);
  for (const auto& rm : mix.rois) {
    ReportRow agg;
    agg.roi = rm.name;
    agg.period = rm.period;
    agg.uncovered_indirect = rm.uncovered_indirect;
    agg.uncovered_extern = rm.uncovered_extern;
    for (std::size_t t = 0; t < dump.threads.size(); ++t) {
      const BankState& b = *dump.threads[t].find(rm.name);
      ReportRow row;
      row.roi = rm.name;
      row.thread = dump.threads[t].thread;
      row.hits = b.hits;
      row.enabled_execs = b.enabled_execs;
      row.period = rm.period;
      row.time = b.time;
      row.incr = b.incr;
      row.saturated = b.saturated;
      row.uncovered_indirect = rm.uncovered_indirect;
      row.uncovered_extern = rm.uncovered_extern;
      for (const auto& [name, tally] : mixes[t].rois)
        if (name == rm.name) row.mix = tally;
      finish_row(row, cfg);
      agg.hits += row.hits;
      agg.enabled_execs += row.enabled_execs;
      agg.time = saturating_add(agg.time, row.time);
      agg.incr = saturating_add(agg.incr, row.incr);
      agg.mix += row.mix;
      agg.saturated = agg.saturated || row.saturated;
      rep.rows.push_back(std::move(row));
    }
    if (dump.threads.size() > 1) {
      finish_row(agg, cfg);
      rep.rows.push_back(std::move(agg));
    }
  }
  return rep;
}

std::string ProfileReport::render_csv() const {
  std::ostringstream os;
  os << kReportCsvHeader << "\n";
  for (const auto& r : rows) {
    const EventTally& m = r.mix;
    os << r.roi << "," << (r.thread ? std::to_string(*r.thread) : std::string("all")) << "," << r.hits << ","
       << r.enabled_execs << "," << r.period << "," << r.time << "," << m.instructions() << "," << m.int_ops
       << "," << m.fp_ops << "," << m.loads << "," << m.stores << "," << m.stack_ops << "," << m.branches << ","
       << m.jumps << "," << m.calls << "," << m.rets << "," << m.intrinsics << "," << m.bytes_read << ","
       << m.bytes_written << "," << r.incr << ",";
    if (r.correction)
      os << fmt_double(r.correction->omaf) << "," << fmt_double(r.correction->nmaf) << ","
         << fmt_double(r.correction->mf) << "," << fmt_double(r.correction->cf) << ",";
    else
      os << ",,,,";
    os << opt(r.read_bw) << "," << opt(r.write_bw) << ",";
    if (cycles_per_sec) os << opt(r.read_bw, *cycles_per_sec) << "," << opt(r.write_bw, *cycles_per_sec) << ",";
    else os << ",,";
    os << (r.saturated ? 1 : 0) << "," << r.uncovered_indirect << "," << r.uncovered_extern << "\n";
  }
  return os.str();
}

std::string ProfileReport::render_text() const {
  std::ostringstream os;
  for (const auto& r : rows) {
    const EventTally& m = r.mix;
    os << "ROI " << r.roi << " thread " << (r.thread ? std::to_string(*r.thread) : std::string("all")) << "\n";
    os << "  hits " << r.hits << ", enabled executions " << r.enabled_execs;
    if (r.period > 1) os << " (sampling period " << r.period << ": raw counts, extrapolation factor " << r.period << ")";
    os << "\n";
    os << "  time " << r.time << " cycles, counter increments " << r.incr << "\n";
    os << "  instructions " << m.instructions() << ": int " << m.int_ops << ", fp " << m.fp_ops << ", load "
       << m.loads << ", store " << m.stores << ", stack " << m.stack_ops << ", branch " << m.branches << ", jump "
       << m.jumps << ", call " << m.calls << ", ret " << m.rets << ", intrinsic " << m.intrinsics << "\n";
    os << "  bytes read " << m.bytes_read << ", bytes written " << m.bytes_written << "\n";
    if (r.correction)
      os << "  OMAF " << fmt_double(r.correction->omaf) << ", NMAF " << fmt_double(r.correction->nmaf) << ", MF "
         << fmt_double(r.correction->mf) << ", CF " << fmt_double(r.correction->cf) << "\n";
    if (r.read_bw) {
      os << "  read bandwidth " << fmt_double(*r.read_bw) << " B/cycle, write bandwidth " << fmt_double(*r.write_bw)
         << " B/cycle";
      if (cycles_per_sec)
        os << " (" << fmt_double(*r.read_bw * *cycles_per_sec) << " / " << fmt_double(*r.write_bw * *cycles_per_sec)
           << " B/s)";
      os << "\n";
    } else {
      os << "  bandwidth unavailable (no timed executions)\n";
    }
    if (r.saturated) os << "  warning: counters saturated\n";
    if (r.uncovered_indirect || r.uncovered_extern)
      os << "  warning: " << r.uncovered_indirect << " uncovered indirect call site(s), " << r.uncovered_extern
         << " extern call site(s); counts may be low\n";
  }
  return os.str();
}

}  // namespace memroi
