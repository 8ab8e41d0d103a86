#pragma once

// Benchmark harness. Four experiment families, each reported as CSV rows
// with one stable schema:
//   range-grid         latency vs query range and block size, per variant
//   eviction-sweep     latency vs eviction batch R, roram only
//   interval-sweep     fixed-span query latency vs aggregation interval
//   variant-throughput closed-loop 95%-read throughput per variant

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "timeclave/tsengine.hpp"

namespace timeclave {

// One measured grid cell. `range` carries the family's swept x value: query
// range in blocks for range-grid, eviction batch R for eviction-sweep,
// planned block count for interval-sweep, 1 for variant-throughput.
struct BenchRow {
  std::string variant;  // roram | pathoram-baseline | nonoblivious
  std::uint32_t range = 0;
  std::uint32_t block_bytes = 0;
  double p50_us = 0;
  double p95_us = 0;
  double throughput_ops = 0;  // ops/s over the cell's measurement window
};

struct BenchReport {
  std::string workload;  // short id, emitted as a csv comment line
  std::string note;      // column semantics where they bend
  std::vector<BenchRow> rows;
};

struct BenchOptions {
  std::uint64_t n = std::uint64_t{1} << 14;  // blocks per store
  std::uint32_t z = 4;
  std::uint32_t r = 32;           // eviction batch for roram stores
  std::uint64_t seed = 1;
  std::uint32_t workers = 4;      // closed-loop clients, throughput runs
  std::uint32_t samples = 200;    // latency samples per grid cell
  std::uint32_t ops = 10'000;     // total operations per throughput run
  double write_fraction = 0.05;
  std::uint32_t fixed_block_bytes = 40;  // block size where it is not swept

  std::vector<std::uint32_t> ranges = {1, 10, 20, 30, 40, 50};
  std::vector<std::uint32_t> block_sizes = {8, 16, 32, 64, 128};
  std::vector<std::uint32_t> evict_batches = {1, 2, 4, 8, 16, 32, 64};
  std::vector<std::uint64_t> sweep_intervals_ms = {1'000, 5'000, 10'000,
                                                   20'000};
  std::uint64_t sweep_span_ms = 600'000;  // wall-clock span each query covers
  std::vector<StoreKind> variants = {StoreKind::roram, StoreKind::pathoram,
                                     StoreKind::plain};
};

const char* bench_variant_label(StoreKind k);

BenchReport bench_range_grid(const BenchOptions& opt);
BenchReport bench_eviction_sweep(const BenchOptions& opt);
BenchReport bench_interval_sweep(const BenchOptions& opt);
BenchReport bench_variant_compare(const BenchOptions& opt);
std::vector<BenchReport> bench_all(const BenchOptions& opt);

// variant,range,block_bytes,p50_us,p95_us,throughput_ops
extern const char kBenchCsvHeader[];
void write_csv(std::ostream& out, const BenchReport& report);

}  // namespace timeclave
