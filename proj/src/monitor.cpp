#include "memroi/monitor.hpp"

#include <cstdio>
#include <sstream>

#include "memroi/diagnostics.hpp"
#include "memroi/eir.hpp"
#include "memroi/wire.hpp"

namespace memroi {

const char* const kEpochCsvHeader =
    "epoch,snapshot_id,vtime,thread,roi,delta_hits,delta_time,bytes_read,bytes_written,counter_incr,cf,"
    "read_bw_bpc,write_bw_bpc,saturated,partial";

std::uint64_t StreamSink::begin(const Handshake& h) {
  try {
    ch_.send(encode(h));
    auto reply = ch_.recv();
    if (!reply) {
      closed_ = true;
      return 0;
    }
    auto msg = decode(*reply);
    if (const auto* p = std::get_if<PollRequest>(&msg)) return p->period;
    throw Error("protocol error: expected a poll request after the handshake");
  } catch (const TransportClosed&) {
    closed_ = true;
    return 0;
  }
}

void StreamSink::snapshot(const Snapshot& s) {
  if (closed_) return;
  try {
    ch_.send(encode(s));
  } catch (const TransportClosed&) {
    closed_ = true;
  }
}

MonitorSession serve(Channel& ch, std::uint64_t period, const StaticMix* mix) {
  MonitorSession s;
  auto first = ch.recv();
  if (!first) throw Error("monitor: connection closed before the handshake");
  auto msg = decode(*first);
  const auto* h = std::get_if<Handshake>(&msg);
  if (!h) throw Error("protocol error: expected a handshake");
  if (h->version != kProtocolVersion)
    throw Error("protocol version mismatch: peer speaks " + std::to_string(h->version) + ", expected " +
                std::to_string(kProtocolVersion));
  if (mix && mix->module_hash != h->module_hash) {
    ch.close();
    throw Error("module hash mismatch: run is " + hash_hex(h->module_hash) + ", mix file is for " +
                hash_hex(mix->module_hash));
  }
  s.handshake = *h;
  ch.send(encode(PollRequest{period}));
  while (true) {
    auto raw = ch.recv();
    if (!raw) {
      s.partial = true;
      break;
    }
    auto m = decode(*raw);
    auto* snap = std::get_if<Snapshot>(&m);
    if (!snap) throw Error("protocol error: expected a snapshot");
    if (!s.snapshots.empty() && snap->id <= s.snapshots.back().id)
      throw Error("protocol error: snapshot ids are not increasing");
    const bool fin = snap->final;
    s.snapshots.push_back(std::move(*snap));
    if (fin) break;
  }
  return s;
}

namespace {

std::uint64_t sub0(std::uint64_t a, std::uint64_t b) { return a > b ? a - b : 0; }

std::vector<std::uint64_t> diff(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b) {
  if (a.size() != b.size()) throw Error("protocol error: bank shape changed between snapshots");
  std::vector<std::uint64_t> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = sub0(a[i], b[i]);
  return d;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

std::vector<EpochStats> epoch_stats(const MonitorSession& session, const StaticMix& mix, const ReportConfig& cfg) {
  std::vector<EpochStats> out;
  const auto& snaps = session.snapshots;
  for (std::size_t k = 1; k < snaps.size(); ++k) {
    const Snapshot& prev = snaps[k - 1];
    const Snapshot& cur = snaps[k];
    if (cur.id <= prev.id) throw Error("protocol error: snapshot ids are not increasing");
    if (cur.threads.size() != prev.threads.size()) throw Error("protocol error: thread set changed between snapshots");
    for (std::size_t t = 0; t < cur.threads.size(); ++t) {
      for (const auto& b : cur.threads[t].banks) {
        const BankState* a = prev.threads[t].find(b.roi);
        const RoiMix* rm = mix.find(b.roi);
        if (!a || !rm) throw Error("monitor: unknown ROI " + b.roi + " in snapshot");
        EpochStats e;
        e.epoch = k;
        e.snapshot_id = cur.id;
        e.vtime = cur.vtime;
        e.thread = cur.threads[t].thread;
        e.roi = b.roi;
        e.delta.roi = b.roi;
        e.delta.hits = sub0(b.hits, a->hits);
        e.delta.enabled_execs = sub0(b.enabled_execs, a->enabled_execs);
        e.delta.time = sub0(b.time, a->time);
        e.delta.incr = sub0(b.incr, a->incr);
        e.delta.counters = diff(b.counters, a->counters);
        e.delta.isz_load = diff(b.isz_load, a->isz_load);
        e.delta.isz_store = diff(b.isz_store, a->isz_store);
        e.saturated = b.saturated;
        e.delta.saturated = b.saturated;
        e.partial = session.partial && k + 1 == snaps.size();
        e.mix = dynamic_mix(*rm, e.delta);
        if (e.mix.instructions() > 0) {
          ProfileInputs p;
          p.instructions_executed = e.mix.instructions();
          p.counter_increments = e.delta.incr;
          p.total_memory_accesses = e.mix.memory_accesses();
          e.correction = correction_factor(p, cfg.incr_weight);
        }
        if (e.delta.time > 0) {
          const double cf = e.correction ? e.correction->cf : 1.0;
          e.read_bw = bandwidth(e.mix.bytes_read, e.delta.time, cf);
          e.write_bw = bandwidth(e.mix.bytes_written, e.delta.time, cf);
        }
        out.push_back(std::move(e));
      }
    }
  }
  return out;
}

std::string render_epoch_csv(const std::vector<EpochStats>& epochs) {
  std::ostringstream os;
  os << kEpochCsvHeader << "\n";
  for (const auto& e : epochs) {
    os << e.epoch << "," << e.snapshot_id << "," << e.vtime << "," << e.thread << "," << e.roi << ","
       << e.delta.hits << "," << e.delta.time << "," << e.mix.bytes_read << "," << e.mix.bytes_written << ","
       << e.delta.incr << "," << (e.correction ? fmt(e.correction->cf) : fmt(1.0)) << "," << fmt(e.read_bw) << ","
       << fmt(e.write_bw) << "," << (e.saturated ? 1 : 0) << "," << (e.partial ? 1 : 0) << "\n";
  }
  return os.str();
}

}  // namespace memroi
