#pragma once

// Access trace capture and statistical checking. A trace is the sequence of
// externally visible storage touches, grouped into operations. Leaf indices
// recorded for path reads feed the distinct-path and uniformity checks; the
// shape signature discards indices and keeps only per-op event kinds.

#include <cstdint>
#include <string>
#include <vector>

namespace timeclave {

enum class TraceEventKind : std::uint8_t {
  path_read = 1,        // full path fetch, index = leaf
  dummy_path_read = 2,  // debug labelling only, index = leaf
  bucket_write = 3,     // index = bucket
  fake_bucket_access = 4,
  stash_sweep = 5,      // index = sweep extent
  posmap_walk = 6,      // index = depth<<32 | leaf
  sync_copy = 7,        // index = bucket, or kSyncMarker closing a batch
};

enum class TraceOpKind : std::uint8_t {
  read = 1,
  write = 2,
  evict = 3,
};

inline constexpr std::uint64_t kSyncMarker = ~std::uint64_t{0};

class TraceSink {
 public:
  virtual ~TraceSink() = default;
  // Called once by the traced structure so the sink knows the tree geometry.
  virtual void bind(std::uint64_t n, std::uint32_t z, std::uint32_t r,
                    std::uint32_t l) = 0;
  virtual void op_begin(TraceOpKind kind, std::uint64_t arg_hash) = 0;
  virtual void event(TraceEventKind kind, std::uint64_t index) = 0;
};

struct TraceEvent {
  std::uint8_t kind;
  std::uint64_t index;
  std::uint64_t seq;
};

struct TraceOp {
  std::uint8_t kind;
  std::uint64_t arg_hash;
  std::uint64_t first_seq;
};

class TraceBuffer final : public TraceSink {
 public:
  TraceBuffer() = default;

  void bind(std::uint64_t n, std::uint32_t z, std::uint32_t r,
            std::uint32_t l) override {
    n_ = n;
    z_ = z;
    r_ = r;
    l_ = l;
  }

  void op_begin(TraceOpKind kind, std::uint64_t arg_hash) override;
  void event(TraceEventKind kind, std::uint64_t index) override;

  const std::vector<TraceEvent>& events() const { return events_; }
  const std::vector<TraceOp>& ops() const { return ops_; }
  std::uint64_t n() const { return n_; }
  std::uint32_t z() const { return z_; }
  std::uint32_t r() const { return r_; }
  std::uint32_t l() const { return l_; }

  void clear();
  void save(const std::string& path) const;
  static TraceBuffer load(const std::string& path);

  // One line per op: op letter followed by one letter per event. Identical
  // op streams produce byte-identical signatures.
  std::string shape() const;

 private:
  std::uint64_t n_ = 0;
  std::uint32_t z_ = 0;
  std::uint32_t r_ = 0;
  std::uint32_t l_ = 0;
  std::uint64_t seq_ = 0;
  std::vector<TraceEvent> events_;
  std::vector<TraceOp> ops_;
};

struct DistinctPathReport {
  bool ok;
  std::uint64_t windows;
  std::uint64_t violations;
  std::uint64_t path_reads;
};

// Within each eviction window all read paths must be pairwise distinct.
// Windows are closed by the sync_copy batch marker.
DistinctPathReport check_distinct_paths(const TraceBuffer& t);

struct UniformityReport {
  bool ok;
  double p_value;
  double chi2;
  std::uint64_t samples;
  std::uint64_t cells;
};

// Pools every path-read leaf and tests against the uniform distribution over
// the 2^l leaves. Requires at least min_samples observations.
UniformityReport check_uniformity(const TraceBuffer& t, double alpha,
                                  std::uint64_t min_samples = 10000);

std::uint64_t hash_arg(std::uint64_t x);

}  // namespace timeclave
