#include <charconv>
#include <sstream>

#include "memroi/counters.hpp"
#include "memroi/diagnostics.hpp"
#include "memroi/eir.hpp"
#include "memroi/mixfile.hpp"

namespace memroi {

namespace {

[[noreturn]] void fail(std::size_t line, const std::string& msg) {
  throw Error(Diagnostic{Severity::Error, msg, static_cast<int>(line), 0});
}

std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> out;
  while (!text.empty()) {
    auto nl = text.find('\n');
    std::string_view l = text.substr(0, nl);
    if (!l.empty() && l.back() == '\r') l.remove_suffix(1);
    out.push_back(l);
    if (nl == std::string_view::npos) break;
    text.remove_prefix(nl + 1);
  }
  return out;
}

void expect_key(const std::vector<std::string>& w, std::size_t i, std::string_view key, std::size_t line) {
  if (i >= w.size() || w[i] != key)
    fail(line, "expected '" + std::string(key) + "'" + (i < w.size() ? ", got '" + w[i] + "'" : ""));
}

}  // namespace

std::vector<std::string> split_ws(std::string_view line) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) out.emplace_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

std::uint64_t parse_u64(std::string_view s, std::string_view what, std::size_t line) {
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    fail(line, "invalid " + std::string(what) + " '" + std::string(s) + "'");
  return v;
}

std::uint64_t parse_hash(std::string_view s, std::size_t line) {
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v, 16);
  if (ec != std::errc() || p != s.data() + s.size() || s.size() != 16)
    fail(line, "invalid module hash '" + std::string(s) + "'");
  return v;
}

const RoiMix* StaticMix::find(std::string_view roi) const {
  for (const auto& r : rois)
    if (r.name == roi) return &r;
  return nullptr;
}

const BankState* ThreadBanks::find(std::string_view roi) const {
  for (const auto& b : banks)
    if (b.roi == roi) return &b;
  return nullptr;
}

std::string write_mix(const StaticMix& m) {
  std::ostringstream os;
  os << "module " << hash_hex(m.module_hash) << "\n";
  for (const auto& r : m.rois) {
    os << "roi " << r.name << " bank " << r.bank_id << " counters " << r.counters.size()
       << " intrinsic_slots " << r.intrinsic_slots << " period " << r.period << "\n";
    if (r.uncovered_indirect || r.uncovered_extern)
      os << "uncovered " << r.name << " indirect " << r.uncovered_indirect << " extern "
         << r.uncovered_extern << "\n";
    for (std::size_t i = 0; i < r.counters.size(); ++i) {
      const EventTally& t = r.counters[i];
      os << "ctr " << i << " int " << t.int_ops << " fp " << t.fp_ops << " load " << t.loads
         << " store " << t.stores << " branch " << t.branches << " jump " << t.jumps << " call "
         << t.calls << " ret " << t.rets << " bytes_r " << t.bytes_read << " bytes_w "
         << t.bytes_written << " stack_ops " << t.stack_ops << " intrinsic " << t.intrinsics
         << "\n";
    }
  }
  return os.str();
}

StaticMix read_mix(std::string_view text) {
  StaticMix m;
  bool have_module = false;
  std::vector<std::uint64_t> declared;  // counters per ROI from the header
  std::size_t ln = 0;
  for (std::string_view raw : lines_of(text)) {
    ++ln;
    auto w = split_ws(raw);
    if (w.empty() || w[0][0] == '#') continue;
    if (w[0] == "module") {
      if (w.size() != 2) fail(ln, "malformed module line");
      m.module_hash = parse_hash(w[1], ln);
      have_module = true;
    } else if (w[0] == "roi") {
      if (w.size() != 10) fail(ln, "malformed roi line");
      RoiMix r;
      r.name = w[1];
      expect_key(w, 2, "bank", ln);
      r.bank_id = static_cast<std::uint32_t>(parse_u64(w[3], "bank id", ln));
      expect_key(w, 4, "counters", ln);
      declared.push_back(parse_u64(w[5], "counter count", ln));
      expect_key(w, 6, "intrinsic_slots", ln);
      r.intrinsic_slots = static_cast<std::uint32_t>(parse_u64(w[7], "slot count", ln));
      expect_key(w, 8, "period", ln);
      r.period = parse_u64(w[9], "period", ln);
      if (r.period == 0) fail(ln, "period must be at least 1");
      if (m.find(r.name)) fail(ln, "duplicate roi " + r.name);
      m.rois.push_back(std::move(r));
    } else if (w[0] == "uncovered") {
      if (w.size() != 6) fail(ln, "malformed uncovered line");
      if (m.rois.empty() || m.rois.back().name != w[1]) fail(ln, "uncovered line for unknown roi");
      expect_key(w, 2, "indirect", ln);
      m.rois.back().uncovered_indirect = parse_u64(w[3], "count", ln);
      expect_key(w, 4, "extern", ln);
      m.rois.back().uncovered_extern = parse_u64(w[5], "count", ln);
    } else if (w[0] == "ctr") {
      if (m.rois.empty()) fail(ln, "ctr record before any roi");
      if (w.size() != 26) fail(ln, "malformed ctr record");
      RoiMix& r = m.rois.back();
      if (parse_u64(w[1], "counter index", ln) != r.counters.size())
        fail(ln, "counter records out of order");
      static constexpr std::string_view keys[] = {"int", "fp", "load", "store", "branch", "jump",
                                                  "call", "ret", "bytes_r", "bytes_w", "stack_ops",
                                                  "intrinsic"};
      std::uint64_t v[12];
      for (int k = 0; k < 12; ++k) {
        expect_key(w, 2 + 2 * k, keys[k], ln);
        v[k] = parse_u64(w[3 + 2 * k], keys[k], ln);
      }
      EventTally t;
      t.int_ops = v[0];
      t.fp_ops = v[1];
      t.loads = v[2];
      t.stores = v[3];
      t.branches = v[4];
      t.jumps = v[5];
      t.calls = v[6];
      t.rets = v[7];
      t.bytes_read = v[8];
      t.bytes_written = v[9];
      t.stack_ops = v[10];
      t.intrinsics = v[11];
      r.counters.push_back(t);
    } else {
      fail(ln, "unknown mix record '" + w[0] + "'");
    }
  }
  if (!have_module) fail(ln, "mix file has no module line");
  for (std::size_t i = 0; i < m.rois.size(); ++i)
    if (m.rois[i].counters.size() != declared[i])
      fail(ln, "roi " + m.rois[i].name + " declares " + std::to_string(declared[i]) +
                   " counters but has " + std::to_string(m.rois[i].counters.size()));
  return m;
}

std::string write_dump(const CounterDump& d) {
  std::ostringstream os;
  os << "module " << hash_hex(d.module_hash) << "\n";
  for (const auto& t : d.threads) {
    os << "thread " << t.thread << "\n";
    for (const auto& b : t.banks) {
      os << "roi " << b.roi << " hits " << b.hits << " enabled_execs " << b.enabled_execs
         << " time " << b.time << "\n";
      os << "incr " << b.incr << "\n";
      if (b.saturated) os << "saturated\n";
      for (std::size_t i = 0; i < b.counters.size(); ++i) os << "ctr " << i << " " << b.counters[i] << "\n";
      for (std::size_t i = 0; i < b.isz_load.size(); ++i)
        os << "isz load " << i << " " << b.isz_load[i] << "\n";
      for (std::size_t i = 0; i < b.isz_store.size(); ++i)
        os << "isz store " << i << " " << b.isz_store[i] << "\n";
    }
  }
  return os.str();
}

CounterDump read_dump(std::string_view text) {
  CounterDump d;
  bool have_module = false;
  std::size_t ln = 0;
  auto bank = [&]() -> BankState& {
    if (d.threads.empty() || d.threads.back().banks.empty()) fail(ln, "record outside an roi section");
    return d.threads.back().banks.back();
  };
  for (std::string_view raw : lines_of(text)) {
    ++ln;
    auto w = split_ws(raw);
    if (w.empty() || w[0][0] == '#') continue;
    if (w[0] == "module") {
      if (w.size() != 2) fail(ln, "malformed module line");
      d.module_hash = parse_hash(w[1], ln);
      have_module = true;
    } else if (w[0] == "thread") {
      if (w.size() != 2) fail(ln, "malformed thread line");
      d.threads.push_back({static_cast<std::uint32_t>(parse_u64(w[1], "thread id", ln)), {}});
    } else if (w[0] == "roi") {
      if (d.threads.empty()) fail(ln, "roi section before any thread");
      if (w.size() != 8) fail(ln, "malformed roi line");
      BankState b;
      b.roi = w[1];
      expect_key(w, 2, "hits", ln);
      b.hits = parse_u64(w[3], "hits", ln);
      expect_key(w, 4, "enabled_execs", ln);
      b.enabled_execs = parse_u64(w[5], "enabled_execs", ln);
      expect_key(w, 6, "time", ln);
      b.time = parse_u64(w[7], "time", ln);
      d.threads.back().banks.push_back(std::move(b));
    } else if (w[0] == "incr") {
      if (w.size() != 2) fail(ln, "malformed incr line");
      bank().incr = parse_u64(w[1], "incr", ln);
    } else if (w[0] == "saturated") {
      bank().saturated = true;
    } else if (w[0] == "ctr") {
      if (w.size() != 3) fail(ln, "malformed ctr line");
      BankState& b = bank();
      if (parse_u64(w[1], "counter index", ln) != b.counters.size()) fail(ln, "counter lines out of order");
      b.counters.push_back(parse_u64(w[2], "counter value", ln));
    } else if (w[0] == "isz") {
      if (w.size() != 4 || (w[1] != "load" && w[1] != "store")) fail(ln, "malformed isz line");
      BankState& b = bank();
      auto& arr = w[1] == "load" ? b.isz_load : b.isz_store;
      if (parse_u64(w[2], "slot index", ln) != arr.size()) fail(ln, "isz lines out of order");
      arr.push_back(parse_u64(w[3], "slot bytes", ln));
    } else {
      fail(ln, "unknown dump record '" + w[0] + "'");
    }
  }
  if (!have_module) fail(ln, "dump file has no module line");
  return d;
}

}  // namespace memroi
