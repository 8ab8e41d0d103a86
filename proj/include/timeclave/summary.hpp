#pragma once

// Per-interval aggregate blocks and their merge algebra. A block carries the
// eight canonical aggregates for one time interval; merging any partition of
// the underlying points reproduces the aggregate over their union.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>

namespace timeclave {

inline constexpr std::uint32_t kAggCount = 8;

// Codes are wire contract; keep the order stable.
enum class Agg : std::uint8_t {
  count = 0,
  sum = 1,
  sum_sq = 2,
  min = 3,
  max = 4,
  mean = 5,
  variance = 6,
  stdv = 7,
};

const char* agg_name(Agg f);
// Parses "sum", "MAX", ... Returns false on an unknown name.
bool agg_from_name(const char* name, Agg* out);

struct DataPoint {
  std::uint64_t ts = 0;  // epoch milliseconds
  double value = 0;
};

struct SummaryBlock {
  std::uint64_t interval_start = 0;  // epoch ms, aligned to the interval
  std::array<double, kAggCount> agg{};

  static constexpr std::size_t kBytes = 8 + kAggCount * 8;

  // count=0, sums zero, min/max at the largest-finite sentinels.
  static SummaryBlock empty(std::uint64_t interval_start = 0);

  double at(Agg f) const { return agg[static_cast<std::size_t>(f)]; }
  double count() const { return at(Agg::count); }

  void store(std::span<std::byte> out) const;  // out.size() == kBytes
  static SummaryBlock load(std::span<const std::byte> in);
};

// Folds the points of [t_start, t_start+t_ms) into one block. Points are
// trusted to lie inside the interval; the caller filters.
SummaryBlock seal_interval(std::span<const DataPoint> points,
                           std::uint64_t t_start, std::uint64_t t_ms);

// Merges blocks as if their underlying points were one interval. count, sum,
// sum_sq, min and max fold directly; mean is the count-weighted average of
// the block means; variance and stdv are recomputed from the folded moments.
SummaryBlock merge_blocks(std::span<const SummaryBlock> blocks);

// Selects aggregate f from a block, touching every slot in index order so the
// offsets do not depend on f. Empty data: count/sum/sum_sq come back 0, the
// rest raise EmptyRange.
double extract(const SummaryBlock& b, Agg f);

// merge_blocks + extract. Throws InvalidParam on an empty block list.
double merge(Agg f, std::span<const SummaryBlock> blocks);

}  // namespace timeclave
