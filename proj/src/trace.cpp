#include "timeclave/trace.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <cstdio>
#include <cstring>
#include <unordered_set>

#include "timeclave/errors.hpp"

namespace timeclave {

namespace {

constexpr char kMagic[4] = {'O', 'T', 'R', 'C'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& s, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t get_u32(const unsigned char* p) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

char event_letter(std::uint8_t kind) {
  switch (static_cast<TraceEventKind>(kind)) {
    case TraceEventKind::path_read:          return 'p';
    case TraceEventKind::dummy_path_read:    return 'd';
    case TraceEventKind::bucket_write:       return 'w';
    case TraceEventKind::fake_bucket_access: return 'f';
    case TraceEventKind::stash_sweep:        return 's';
    case TraceEventKind::posmap_walk:        return 'm';
    case TraceEventKind::sync_copy:          return 'y';
  }
  return '?';
}

char op_letter(std::uint8_t kind) {
  switch (static_cast<TraceOpKind>(kind)) {
    case TraceOpKind::read:  return 'R';
    case TraceOpKind::write: return 'W';
    case TraceOpKind::evict: return 'E';
  }
  return '?';
}

}  // namespace

std::uint64_t hash_arg(std::uint64_t x) {
  // splitmix64 finaliser
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

void TraceBuffer::op_begin(TraceOpKind kind, std::uint64_t arg_hash) {
  ops_.push_back({static_cast<std::uint8_t>(kind), arg_hash, seq_});
}

void TraceBuffer::event(TraceEventKind kind, std::uint64_t index) {
  events_.push_back({static_cast<std::uint8_t>(kind), index, seq_++});
}

void TraceBuffer::clear() {
  seq_ = 0;
  events_.clear();
  ops_.clear();
}

void TraceBuffer::save(const std::string& path) const {
  std::string out;
  out.reserve(48 + events_.size() * 17 + ops_.size() * 17);
  out.append(kMagic, 4);
  put_u32(out, kVersion);
  put_u32(out, z_);
  put_u32(out, r_);
  put_u32(out, l_);
  put_u32(out, 0);
  put_u64(out, n_);
  put_u64(out, events_.size());
  put_u64(out, ops_.size());
  for (const auto& e : events_) {
    out.push_back(static_cast<char>(e.kind));
    put_u64(out, e.index);
    put_u64(out, e.seq);
  }
  for (const auto& o : ops_) {
    out.push_back(static_cast<char>(o.kind));
    put_u64(out, o.arg_hash);
    put_u64(out, o.first_seq);
  }
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) fail(Errc::io_error, "cannot open " + path);
  const std::size_t wrote = std::fwrite(out.data(), 1, out.size(), f);
  std::fclose(f);
  if (wrote != out.size()) fail(Errc::io_error, "short write to " + path);
}

TraceBuffer TraceBuffer::load(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) fail(Errc::io_error, "cannot open " + path);
  std::string raw;
  char buf[1 << 16];
  std::size_t got;
  while ((got = std::fread(buf, 1, sizeof buf, f)) > 0) raw.append(buf, got);
  std::fclose(f);

  if (raw.size() < 48 || std::memcmp(raw.data(), kMagic, 4) != 0)
    fail(Errc::io_error, "not a trace file: " + path);
  const auto* p = reinterpret_cast<const unsigned char*>(raw.data());
  if (get_u32(p + 4) != kVersion) fail(Errc::io_error, "trace version mismatch");

  TraceBuffer t;
  t.z_ = get_u32(p + 8);
  t.r_ = get_u32(p + 12);
  t.l_ = get_u32(p + 16);
  t.n_ = get_u64(p + 24);
  const std::uint64_t ne = get_u64(p + 32);
  const std::uint64_t no = get_u64(p + 40);
  if (raw.size() != 48 + ne * 17 + no * 17)
    fail(Errc::io_error, "trace file truncated");

  std::size_t off = 48;
  t.events_.reserve(ne);
  for (std::uint64_t i = 0; i < ne; ++i, off += 17)
    t.events_.push_back({p[off], get_u64(p + off + 1), get_u64(p + off + 9)});
  t.ops_.reserve(no);
  for (std::uint64_t i = 0; i < no; ++i, off += 17)
    t.ops_.push_back({p[off], get_u64(p + off + 1), get_u64(p + off + 9)});
  t.seq_ = ne;
  return t;
}

std::string TraceBuffer::shape() const {
  std::string out;
  out.reserve(ops_.size() * 8);
  std::size_t e = 0;
  for (std::size_t k = 0; k < ops_.size(); ++k) {
    const std::uint64_t end_seq =
        (k + 1 < ops_.size()) ? ops_[k + 1].first_seq : ~std::uint64_t{0};
    out.push_back(op_letter(ops_[k].kind));
    while (e < events_.size() && events_[e].seq < end_seq)
      out.push_back(event_letter(events_[e++].kind));
    out.push_back('\n');
  }
  return out;
}

DistinctPathReport check_distinct_paths(const TraceBuffer& t) {
  DistinctPathReport rep{true, 0, 0, 0};
  std::unordered_set<std::uint64_t> window;
  for (const auto& e : t.events()) {
    const auto kind = static_cast<TraceEventKind>(e.kind);
    if (kind == TraceEventKind::path_read ||
        kind == TraceEventKind::dummy_path_read) {
      ++rep.path_reads;
      if (!window.insert(e.index).second) ++rep.violations;
    } else if (kind == TraceEventKind::sync_copy && e.index == kSyncMarker) {
      window.clear();
      ++rep.windows;
    }
  }
  rep.ok = rep.violations == 0;
  return rep;
}

UniformityReport check_uniformity(const TraceBuffer& t, double alpha,
                                  std::uint64_t min_samples) {
  const std::uint64_t cells = std::uint64_t{1} << t.l();
  std::vector<std::uint64_t> counts(cells, 0);
  std::uint64_t samples = 0;
  for (const auto& e : t.events()) {
    const auto kind = static_cast<TraceEventKind>(e.kind);
    if (kind != TraceEventKind::path_read &&
        kind != TraceEventKind::dummy_path_read)
      continue;
    if (e.index >= cells) fail(Errc::io_error, "leaf outside tree in trace");
    ++counts[e.index];
    ++samples;
  }
  if (samples < min_samples)
    fail(Errc::insufficient_samples,
         std::to_string(samples) + " path reads, need " +
             std::to_string(min_samples));

  const double expected = static_cast<double>(samples) / cells;
  double chi2 = 0;
  for (std::uint64_t c : counts) {
    const double d = static_cast<double>(c) - expected;
    chi2 += d * d / expected;
  }
  boost::math::chi_squared dist(static_cast<double>(cells - 1));
  const double p = boost::math::cdf(boost::math::complement(dist, chi2));
  return {p > alpha, p, chi2, samples, cells};
}

}  // namespace timeclave
