#include "timeclave/summary.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <limits>
#include <string>

#include "timeclave/errors.hpp"
#include "timeclave/oblivious.hpp"

namespace timeclave {

using namespace oblivious;

namespace {

constexpr double kMinSentinel = std::numeric_limits<double>::max();
constexpr double kMaxSentinel = std::numeric_limits<double>::lowest();

constexpr std::size_t idx(Agg f) { return static_cast<std::size_t>(f); }

// mean, variance and stdv from the folded moments. Rounding can push the
// raw variance a hair below zero; it is clamped so stdv stays real.
void finalize_moments(SummaryBlock& b) {
  const double n = b.agg[idx(Agg::count)];
  if (n == 0) {
    b.agg[idx(Agg::mean)] = 0;
    b.agg[idx(Agg::variance)] = 0;
    b.agg[idx(Agg::stdv)] = 0;
    return;
  }
  const double mean = b.agg[idx(Agg::mean)];
  const double var =
      std::max(b.agg[idx(Agg::sum_sq)] / n - mean * mean, 0.0);
  b.agg[idx(Agg::variance)] = var;
  b.agg[idx(Agg::stdv)] = std::sqrt(var);
}

}  // namespace

const char* agg_name(Agg f) {
  switch (f) {
    case Agg::count:    return "count";
    case Agg::sum:      return "sum";
    case Agg::sum_sq:   return "sum_sq";
    case Agg::min:      return "min";
    case Agg::max:      return "max";
    case Agg::mean:     return "mean";
    case Agg::variance: return "variance";
    case Agg::stdv:     return "stdv";
  }
  return "?";
}

bool agg_from_name(const char* name, Agg* out) {
  std::string s(name);
  for (char& c : s) c = static_cast<char>(std::tolower(c));
  for (std::uint8_t k = 0; k < kAggCount; ++k) {
    if (s == agg_name(static_cast<Agg>(k))) {
      *out = static_cast<Agg>(k);
      return true;
    }
  }
  if (s == "avg") {  // common alias
    *out = Agg::mean;
    return true;
  }
  return false;
}

SummaryBlock SummaryBlock::empty(std::uint64_t interval_start) {
  SummaryBlock b;
  b.interval_start = interval_start;
  b.agg[idx(Agg::min)] = kMinSentinel;
  b.agg[idx(Agg::max)] = kMaxSentinel;
  return b;
}

void SummaryBlock::store(std::span<std::byte> out) const {
  if (out.size() != kBytes)
    fail(Errc::invalid_param, "summary block needs " + std::to_string(kBytes) +
                                  " bytes, got " + std::to_string(out.size()));
  std::memcpy(out.data(), &interval_start, 8);
  std::memcpy(out.data() + 8, agg.data(), kAggCount * 8);
}

SummaryBlock SummaryBlock::load(std::span<const std::byte> in) {
  if (in.size() != kBytes)
    fail(Errc::invalid_param, "summary block needs " + std::to_string(kBytes) +
                                  " bytes, got " + std::to_string(in.size()));
  SummaryBlock b;
  std::memcpy(&b.interval_start, in.data(), 8);
  std::memcpy(b.agg.data(), in.data() + 8, kAggCount * 8);
  return b;
}

SummaryBlock seal_interval(std::span<const DataPoint> points,
                           std::uint64_t t_start, std::uint64_t) {
  SummaryBlock b = SummaryBlock::empty(t_start);
  double n = 0, sum = 0, sum_sq = 0;
  double lo = kMinSentinel, hi = kMaxSentinel;
  for (const DataPoint& p : points) {
    n += 1;
    sum += p.value;
    sum_sq += p.value * p.value;
    lo = std::min(lo, p.value);
    hi = std::max(hi, p.value);
  }
  b.agg[idx(Agg::count)] = n;
  b.agg[idx(Agg::sum)] = sum;
  b.agg[idx(Agg::sum_sq)] = sum_sq;
  b.agg[idx(Agg::min)] = lo;
  b.agg[idx(Agg::max)] = hi;
  b.agg[idx(Agg::mean)] = n > 0 ? sum / n : 0;
  finalize_moments(b);
  return b;
}

SummaryBlock merge_blocks(std::span<const SummaryBlock> blocks) {
  if (blocks.empty()) fail(Errc::invalid_param, "merge of zero blocks");
  SummaryBlock out = SummaryBlock::empty(blocks[0].interval_start);
  double weighted = 0;  // sum of count_i * mean_i
  for (const SummaryBlock& b : blocks) {
    out.interval_start = std::min(out.interval_start, b.interval_start);
    out.agg[idx(Agg::count)] += b.agg[idx(Agg::count)];
    out.agg[idx(Agg::sum)] += b.agg[idx(Agg::sum)];
    out.agg[idx(Agg::sum_sq)] += b.agg[idx(Agg::sum_sq)];
    out.agg[idx(Agg::min)] = std::min(out.agg[idx(Agg::min)], b.agg[idx(Agg::min)]);
    out.agg[idx(Agg::max)] = std::max(out.agg[idx(Agg::max)], b.agg[idx(Agg::max)]);
    weighted += b.agg[idx(Agg::count)] * b.agg[idx(Agg::mean)];
  }
  const double n = out.agg[idx(Agg::count)];
  out.agg[idx(Agg::mean)] = n > 0 ? weighted / n : 0;
  finalize_moments(out);
  return out;
}

double extract(const SummaryBlock& b, Agg f) {
  std::array<std::uint64_t, kAggCount> bits;
  for (std::size_t i = 0; i < kAggCount; ++i)
    bits[i] = std::bit_cast<std::uint64_t>(b.agg[i]);
  const std::uint64_t raw = o_access(
      AccessOp::read, std::span<std::uint64_t>(bits), idx(f));
  const double v = std::bit_cast<double>(raw);

  if (b.count() == 0) {
    switch (f) {
      case Agg::count:
      case Agg::sum:
      case Agg::sum_sq:
        return 0;
      default:
        fail(Errc::empty_range,
             std::string(agg_name(f)) + " over zero points");
    }
  }
  return v;
}

double merge(Agg f, std::span<const SummaryBlock> blocks) {
  return extract(merge_blocks(blocks), f);
}

}  // namespace timeclave
