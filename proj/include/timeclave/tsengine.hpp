#pragma once

// Time-series layer: buffers raw points, seals one SummaryBlock per closed
// interval into per-level block stores, and answers aggregate queries by
// covering the range with the coarsest blocks that fit.

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "timeclave/roram.hpp"
#include "timeclave/summary.hpp"

namespace timeclave {

// Storage backing one ladder level. Implementations must support dense block
// ids in [0, n).
class IBlockStore {
 public:
  virtual ~IBlockStore() = default;
  virtual bool read(std::uint64_t id, std::span<std::byte> out) = 0;
  virtual void write(std::uint64_t id, std::span<const std::byte> in) = 0;
  // Settles any deferred work (background evictions); a no-op elsewhere.
  virtual void drain() {}
};

enum class StoreKind : std::uint8_t {
  roram = 0,
  pathoram = 1,  // single-tree baseline
  plain = 2,     // direct array, non-oblivious
};

const char* store_kind_name(StoreKind k);
bool store_kind_from_name(const char* name, StoreKind* out);

// For the roram kind, r is clamped to the tree's leaf count so small levels
// stay constructible.
std::unique_ptr<IBlockStore> make_store(StoreKind kind, std::uint64_t n,
                                        std::uint32_t b, std::uint32_t z,
                                        std::uint32_t r, std::uint64_t seed,
                                        EvictionMode mode,
                                        TraceSink* sink = nullptr);

struct EngineConfig {
  std::uint64_t epoch_base = 0;               // ms; block ids count from here
  std::uint64_t retention_ms = 86'400'000;    // W
  std::vector<std::uint64_t> intervals_ms = {10'000};  // ascending ladder V
  StoreKind store = StoreKind::roram;
  std::uint32_t z = 4;
  std::uint32_t r = 16;
  std::uint64_t seed = 1;
  EvictionMode mode = EvictionMode::inline_batch;
};

struct PlanEntry {
  std::uint32_t level;  // index into intervals_ms
  std::uint64_t block_id;
};

struct QueryPlan {
  std::vector<PlanEntry> entries;  // tiles [t_a, t_b) in time order
};

class Engine {
 public:
  explicit Engine(const EngineConfig& cfg);

  // Buffers one point after sealing every interval its timestamp closes.
  // Rejects non-finite values, points behind the finest sealed frontier, and
  // points beyond the retention window.
  void ingest(const DataPoint& p);
  // Seals intervals that end at or before now without adding data.
  void advance(std::uint64_t now_ms);

  // Greedy cover of [t_a, t_b) by coarsest-fitting blocks. t_a == t_b is a
  // point query on the finest block containing t_a. Range endpoints must be
  // aligned to the finest interval.
  QueryPlan plan_query(std::uint64_t t_a, std::uint64_t t_b) const;
  double execute(Agg f, std::uint64_t t_a, std::uint64_t t_b);

  std::uint32_t level_count() const {
    return static_cast<std::uint32_t>(cfg_.intervals_ms.size());
  }
  std::uint64_t blocks_per_level(std::uint32_t level) const {
    return n_[level];
  }
  // Start of the first unsealed interval at this level.
  std::uint64_t frontier(std::uint32_t level) const {
    return frontier_[level];
  }
  std::uint64_t sealed_blocks() const { return sealed_; }
  std::size_t buffered_points() const { return buffer_.size(); }
  const EngineConfig& config() const { return cfg_; }
  IBlockStore& store(std::uint32_t level) { return *stores_[level]; }

 private:
  void seal_level(std::size_t li, std::uint64_t t_start);
  void cover(std::uint64_t a, std::uint64_t b, std::size_t li,
             QueryPlan& out) const;

  EngineConfig cfg_;
  std::vector<std::uint64_t> n_;         // block count per level
  std::vector<std::uint64_t> frontier_;  // per level, absolute ms
  std::vector<std::unique_ptr<IBlockStore>> stores_;
  std::vector<DataPoint> buffer_;        // points of still-open intervals
  std::uint64_t sealed_ = 0;
};

}  // namespace timeclave
