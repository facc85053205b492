#include "memroi/wire.hpp"

#include <string>

#include "memroi/diagnostics.hpp"

namespace memroi {

namespace {

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) { be(v, 2); }
  void u32(std::uint32_t v) { be(v, 4); }
  void u64(std::uint64_t v) { be(v, 8); }
  void str(const std::string& s) {
    if (s.size() > 0xffff) throw Error("protocol error: string too long");
    u16(static_cast<std::uint16_t>(s.size()));
    out_.insert(out_.end(), s.begin(), s.end());
  }
  void len(std::size_t n) {
    if (n > 0xffffffffu) throw Error("protocol error: sequence too long");
    u32(static_cast<std::uint32_t>(n));
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  void be(std::uint64_t v, int bytes) {
    for (int i = bytes - 1; i >= 0; --i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}
  std::uint8_t u8() { return static_cast<std::uint8_t>(be(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(be(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(be(4)); }
  std::uint64_t u64() { return be(8); }
  std::string str() {
    const std::size_t n = u16();
    need(n);
    std::string s(reinterpret_cast<const char*>(in_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  // Element count, bounded by the bytes left so corrupt input cannot force huge allocations.
  std::size_t count(std::size_t min_elem_bytes) {
    const std::size_t n = u32();
    if (min_elem_bytes && n > (in_.size() - pos_) / min_elem_bytes) throw Error("protocol error: truncated message");
    return n;
  }
  void finish() const {
    if (pos_ != in_.size()) throw Error("protocol error: trailing bytes");
  }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw Error("protocol error: truncated message");
  }
  std::uint64_t be(int bytes) {
    need(static_cast<std::size_t>(bytes));
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) v = (v << 8) | in_[pos_++];
    return v;
  }
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

void put_bank(Writer& w, const BankState& b) {
  w.str(b.roi);
  w.u64(b.hits);
  w.u64(b.enabled_execs);
  w.u64(b.time);
  w.u64(b.incr);
  w.u8(b.saturated ? 1 : 0);
  w.len(b.counters.size());
  for (auto v : b.counters) w.u64(v);
  w.len(b.isz_load.size());
  for (auto v : b.isz_load) w.u64(v);
  for (auto v : b.isz_store) w.u64(v);
}

BankState get_bank(Reader& r) {
  BankState b;
  b.roi = r.str();
  b.hits = r.u64();
  b.enabled_execs = r.u64();
  b.time = r.u64();
  b.incr = r.u64();
  const std::uint8_t sat = r.u8();
  if (sat > 1) throw Error("protocol error: bad saturation flag");
  b.saturated = sat == 1;
  b.counters.resize(r.count(8));
  for (auto& v : b.counters) v = r.u64();
  const std::size_t slots = r.count(16);
  b.isz_load.resize(slots);
  b.isz_store.resize(slots);
  for (auto& v : b.isz_load) v = r.u64();
  for (auto& v : b.isz_store) v = r.u64();
  return b;
}

}  // namespace

std::vector<std::uint8_t> encode(const Message& m) {
  Writer w;
  if (const auto* h = std::get_if<Handshake>(&m)) {
    w.u8(static_cast<std::uint8_t>(MsgTag::Handshake));
    w.u16(h->version);
    w.u64(h->module_hash);
    w.len(h->threads.size());
    for (const auto& t : h->threads) {
      w.u32(t.thread);
      w.len(t.rois.size());
      for (const auto& d : t.rois) {
        w.str(d.name);
        w.u32(d.bank_size);
        w.u32(d.isz_slots);
        w.u64(d.period);
      }
    }
  } else if (const auto* p = std::get_if<PollRequest>(&m)) {
    w.u8(static_cast<std::uint8_t>(MsgTag::PollRequest));
    w.u64(p->period);
  } else {
    const auto& s = std::get<Snapshot>(m);
    w.u8(static_cast<std::uint8_t>(MsgTag::Snapshot));
    w.u64(s.id);
    w.u64(s.vtime);
    w.u8(s.final ? 1 : 0);
    w.len(s.threads.size());
    for (const auto& t : s.threads) {
      w.u32(t.thread);
      w.len(t.banks.size());
      for (const auto& b : t.banks) {
        if (b.isz_load.size() != b.isz_store.size()) throw Error("protocol error: unbalanced intrinsic slots");
        put_bank(w, b);
      }
    }
  }
  return w.take();
}

Message decode(std::span<const std::uint8_t> payload) {
  Reader r(payload);
  const std::uint8_t tag = r.u8();
  switch (static_cast<MsgTag>(tag)) {
    case MsgTag::Handshake: {
      Handshake h;
      h.version = r.u16();
      h.module_hash = r.u64();
      h.threads.resize(r.count(8));
      for (auto& t : h.threads) {
        t.thread = r.u32();
        t.rois.resize(r.count(18));
        for (auto& d : t.rois) {
          d.name = r.str();
          d.bank_size = r.u32();
          d.isz_slots = r.u32();
          d.period = r.u64();
        }
      }
      r.finish();
      return h;
    }
    case MsgTag::PollRequest: {
      PollRequest p{r.u64()};
      r.finish();
      return p;
    }
    case MsgTag::Snapshot: {
      Snapshot s;
      s.id = r.u64();
      s.vtime = r.u64();
      const std::uint8_t fin = r.u8();
      if (fin > 1) throw Error("protocol error: bad final flag");
      s.final = fin == 1;
      s.threads.resize(r.count(8));
      for (auto& t : s.threads) {
        t.thread = r.u32();
        t.banks.resize(r.count(43));
        for (auto& b : t.banks) b = get_bank(r);
      }
      r.finish();
      return s;
    }
  }
  throw Error("protocol error: unknown message tag " + std::to_string(tag));
}

std::vector<std::uint8_t> frame(std::span<const std::uint8_t> payload) {
  if (payload.size() > kMaxFrame) throw Error("protocol error: frame too large");
  std::vector<std::uint8_t> out;
  out.reserve(payload.size() + 4);
  const auto n = static_cast<std::uint32_t>(payload.size());
  for (int i = 3; i >= 0; --i) out.push_back(static_cast<std::uint8_t>(n >> (8 * i)));
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

}  // namespace memroi
