#include "timeclave/tsengine.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <string>

#include "timeclave/errors.hpp"
#include "timeclave/pathoram.hpp"
#include "timeclave/tree.hpp"

namespace timeclave {

namespace {

class RoramStore final : public IBlockStore {
 public:
  RoramStore(const RoOramConfig& cfg, TraceSink* sink) : oram_(cfg, sink) {}
  bool read(std::uint64_t id, std::span<std::byte> out) override {
    return oram_.read(id, out);
  }
  void write(std::uint64_t id, std::span<const std::byte> in) override {
    oram_.write(id, in);
  }
  void drain() override { oram_.drain(); }

 private:
  RoOram oram_;
};

class PathoramStore final : public IBlockStore {
 public:
  explicit PathoramStore(const PathOram::Config& cfg) : oram_(cfg) {}
  bool read(std::uint64_t id, std::span<std::byte> out) override {
    return oram_.read(id, out);
  }
  void write(std::uint64_t id, std::span<const std::byte> in) override {
    oram_.write(id, in);
  }

 private:
  PathOram oram_;
};

class PlainStore final : public IBlockStore {
 public:
  PlainStore(std::uint64_t n, std::uint32_t b)
      : b_(b), data_(n * b), present_(n, false) {}
  bool read(std::uint64_t id, std::span<std::byte> out) override {
    check(id, out.size());
    if (!present_[id]) {
      std::memset(out.data(), 0, out.size());
      return false;
    }
    std::memcpy(out.data(), data_.data() + id * b_, b_);
    return true;
  }
  void write(std::uint64_t id, std::span<const std::byte> in) override {
    check(id, in.size());
    std::memcpy(data_.data() + id * b_, in.data(), b_);
    present_[id] = true;
  }

 private:
  void check(std::uint64_t id, std::size_t len) const {
    if (id >= present_.size())
      fail(Errc::index_out_of_range,
           "block " + std::to_string(id) + " of " +
               std::to_string(present_.size()));
    if (len != b_) fail(Errc::invalid_param, "payload size mismatch");
  }
  std::uint32_t b_;
  std::vector<std::byte> data_;
  std::vector<bool> present_;
};

}  // namespace

const char* store_kind_name(StoreKind k) {
  switch (k) {
    case StoreKind::roram:    return "roram";
    case StoreKind::pathoram: return "pathoram";
    case StoreKind::plain:    return "plain";
  }
  return "?";
}

bool store_kind_from_name(const char* name, StoreKind* out) {
  std::string s(name);
  for (char& c : s) c = static_cast<char>(std::tolower(c));
  for (std::uint8_t k = 0; k < 3; ++k) {
    if (s == store_kind_name(static_cast<StoreKind>(k))) {
      *out = static_cast<StoreKind>(k);
      return true;
    }
  }
  if (s == "nonoblivious") {
    *out = StoreKind::plain;
    return true;
  }
  return false;
}

std::unique_ptr<IBlockStore> make_store(StoreKind kind, std::uint64_t n,
                                        std::uint32_t b, std::uint32_t z,
                                        std::uint32_t r, std::uint64_t seed,
                                        EvictionMode mode, TraceSink* sink) {
  switch (kind) {
    case StoreKind::roram: {
      const std::uint32_t leaves =
          TreeGeometry::leaf_count(TreeGeometry::height_for(n));
      RoOramConfig cfg;
      cfg.n = n;
      cfg.z = z;
      cfg.b = b;
      cfg.r = std::min(r, leaves);
      cfg.seed = seed;
      cfg.mode = mode;
      return std::make_unique<RoramStore>(cfg, sink);
    }
    case StoreKind::pathoram: {
      PathOram::Config cfg;
      cfg.n = n;
      cfg.z = z;
      cfg.b = b;
      cfg.seed = seed;
      return std::make_unique<PathoramStore>(cfg);
    }
    case StoreKind::plain:
      return std::make_unique<PlainStore>(n, b);
  }
  fail(Errc::invalid_param, "unknown store kind");
}

Engine::Engine(const EngineConfig& cfg) : cfg_(cfg) {
  if (cfg_.intervals_ms.empty())
    fail(Errc::config_error, "interval ladder is empty");
  for (std::size_t i = 0; i < cfg_.intervals_ms.size(); ++i) {
    const std::uint64_t t = cfg_.intervals_ms[i];
    if (t == 0) fail(Errc::config_error, "zero aggregation interval");
    if (i > 0 && cfg_.intervals_ms[i] % cfg_.intervals_ms[i - 1] != 0)
      fail(Errc::config_error,
           "interval " + std::to_string(t) + "ms is not a multiple of " +
               std::to_string(cfg_.intervals_ms[i - 1]) + "ms");
  }
  if (cfg_.retention_ms < cfg_.intervals_ms.back())
    fail(Errc::config_error, "retention shorter than the coarsest interval");

  for (std::size_t i = 0; i < cfg_.intervals_ms.size(); ++i) {
    const std::uint64_t t = cfg_.intervals_ms[i];
    const std::uint64_t n = (cfg_.retention_ms + t - 1) / t;
    n_.push_back(n);
    frontier_.push_back(cfg_.epoch_base);
    stores_.push_back(make_store(cfg_.store, n, SummaryBlock::kBytes, cfg_.z,
                                 cfg_.r, cfg_.seed + i, cfg_.mode));
  }
}

void Engine::seal_level(std::size_t li, std::uint64_t t_start) {
  const std::uint64_t t = cfg_.intervals_ms[li];
  std::vector<DataPoint> inside;
  for (const DataPoint& p : buffer_)
    if (p.ts >= t_start && p.ts < t_start + t) inside.push_back(p);
  const SummaryBlock b = seal_interval(inside, t_start, t);
  std::array<std::byte, SummaryBlock::kBytes> bytes;
  b.store(bytes);
  stores_[li]->write((t_start - cfg_.epoch_base) / t, bytes);
  ++sealed_;
}

void Engine::advance(std::uint64_t now_ms) {
  const std::uint64_t horizon =
      std::min(now_ms, cfg_.epoch_base + cfg_.retention_ms);
  for (std::size_t li = 0; li < cfg_.intervals_ms.size(); ++li) {
    const std::uint64_t t = cfg_.intervals_ms[li];
    while (frontier_[li] + t <= horizon) {
      seal_level(li, frontier_[li]);
      frontier_[li] += t;
    }
  }
  // Points behind every frontier can no longer be sealed into anything.
  const std::uint64_t keep_from =
      *std::min_element(frontier_.begin(), frontier_.end());
  std::erase_if(buffer_,
                [keep_from](const DataPoint& p) { return p.ts < keep_from; });
}

void Engine::ingest(const DataPoint& p) {
  if (!std::isfinite(p.value))
    fail(Errc::non_finite_value, "value is not finite");
  if (p.ts < cfg_.epoch_base || p.ts < frontier_.front())
    fail(Errc::late_point,
         "point at " + std::to_string(p.ts) + "ms is behind the sealed " +
             "frontier " + std::to_string(frontier_.front()) + "ms");
  if (p.ts >= cfg_.epoch_base + cfg_.retention_ms)
    fail(Errc::capacity_exceeded,
         "point at " + std::to_string(p.ts) + "ms is beyond the retention " +
             "window");
  advance(p.ts);
  buffer_.push_back(p);
}

void Engine::cover(std::uint64_t a, std::uint64_t b, std::size_t li,
                   QueryPlan& out) const {
  if (a >= b) return;
  const std::uint64_t t = cfg_.intervals_ms[li];
  const std::uint64_t base = cfg_.epoch_base;
  if (li == 0) {
    for (std::uint64_t s = a; s < b; s += t)
      out.entries.push_back({0, (s - base) / t});
    return;
  }
  const std::uint64_t lo = base + (a - base + t - 1) / t * t;  // round up
  const std::uint64_t hi = base + (b - base) / t * t;          // round down
  if (lo >= hi) {
    cover(a, b, li - 1, out);
    return;
  }
  cover(a, lo, li - 1, out);
  for (std::uint64_t s = lo; s < hi; s += t)
    out.entries.push_back(
        {static_cast<std::uint32_t>(li), (s - base) / t});
  cover(hi, b, li - 1, out);
}

QueryPlan Engine::plan_query(std::uint64_t t_a, std::uint64_t t_b) const {
  if (t_a > t_b) fail(Errc::invalid_param, "t_a after t_b");
  const std::uint64_t base = cfg_.epoch_base;
  const std::uint64_t end = base + cfg_.retention_ms;
  if (t_a < base || t_b > end)
    fail(Errc::invalid_param, "query outside the retention window");

  QueryPlan plan;
  const std::uint64_t fine = cfg_.intervals_ms.front();
  if (t_a == t_b) {  // point query on the finest block containing t_a
    if (t_a == end) fail(Errc::invalid_param, "point at the window edge");
    plan.entries.push_back({0, (t_a - base) / fine});
    return plan;
  }
  if ((t_a - base) % fine != 0 || (t_b - base) % fine != 0)
    fail(Errc::unaligned_range,
         "range endpoints must be multiples of " + std::to_string(fine) +
             "ms");
  cover(t_a, t_b, cfg_.intervals_ms.size() - 1, plan);
  return plan;
}

double Engine::execute(Agg f, std::uint64_t t_a, std::uint64_t t_b) {
  const QueryPlan plan = plan_query(t_a, t_b);
  std::vector<SummaryBlock> blocks;
  blocks.reserve(plan.entries.size());
  std::array<std::byte, SummaryBlock::kBytes> bytes;
  for (const PlanEntry& e : plan.entries) {
    if (stores_[e.level]->read(e.block_id, bytes)) {
      blocks.push_back(SummaryBlock::load(bytes));
    } else {
      // Interval not sealed yet: contributes nothing.
      const std::uint64_t t = cfg_.intervals_ms[e.level];
      blocks.push_back(
          SummaryBlock::empty(cfg_.epoch_base + e.block_id * t));
    }
  }
  return merge(f, blocks);
}

}  // namespace timeclave
