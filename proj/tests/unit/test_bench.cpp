#include <doctest.h>

#include <sstream>
#include <string>

#include "timeclave/bench.hpp"
#include "timeclave/errors.hpp"

using namespace timeclave;

namespace {

// Small enough to run in test time, large enough to exercise every family.
BenchOptions tiny() {
  BenchOptions o;
  o.n = 256;
  o.r = 8;
  o.samples = 8;
  o.ops = 64;
  o.workers = 2;
  o.ranges = {1, 3};
  o.block_sizes = {8, 16};
  o.evict_batches = {2, 8};
  o.sweep_intervals_ms = {1'000, 2'000};
  o.sweep_span_ms = 20'000;
  return o;
}

}  // namespace

TEST_CASE("the range grid is complete and populated") {
  const BenchReport rep = bench_range_grid(tiny());
  CHECK(rep.rows.size() == 3 * 2 * 2);  // variants x block sizes x ranges
  for (const BenchRow& r : rep.rows) {
    CHECK(r.p50_us > 0);
    CHECK(r.p95_us >= r.p50_us);
    CHECK(r.throughput_ops > 0);
    CHECK((r.variant == "roram" || r.variant == "pathoram-baseline" ||
           r.variant == "nonoblivious"));
  }
}

TEST_CASE("the eviction sweep covers every batch size") {
  const BenchReport rep = bench_eviction_sweep(tiny());
  REQUIRE(rep.rows.size() == 2);
  CHECK(rep.rows[0].variant == "roram");
  CHECK(rep.rows[0].range == 2);
  CHECK(rep.rows[1].range == 8);
  CHECK(rep.rows[0].block_bytes == 40);
}

TEST_CASE("the interval sweep reports the planned block counts") {
  const BenchReport rep = bench_interval_sweep(tiny());
  REQUIRE(rep.rows.size() == 2);
  CHECK(rep.rows[0].range == 20);  // 20s span / 1s
  CHECK(rep.rows[1].range == 10);  // 20s span / 2s
  CHECK(rep.rows[0].block_bytes == 72);
  CHECK(rep.rows[0].p50_us > 0);
}

TEST_CASE("the variant comparison covers all three systems") {
  const BenchReport rep = bench_variant_compare(tiny());
  REQUIRE(rep.rows.size() == 3);
  CHECK(rep.rows[0].variant == "roram");
  CHECK(rep.rows[1].variant == "pathoram-baseline");
  CHECK(rep.rows[2].variant == "nonoblivious");
  for (const BenchRow& r : rep.rows) CHECK(r.throughput_ops > 0);
}

TEST_CASE("csv output keeps the pinned header") {
  const BenchReport rep = bench_eviction_sweep(tiny());
  std::ostringstream out;
  write_csv(out, rep);
  std::istringstream in(out.str());
  std::string line;
  std::string first_data;
  int rows = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.rfind("#", 0) == 0) continue;
    if (!header_seen) {
      CHECK(line == "variant,range,block_bytes,p50_us,p95_us,throughput_ops");
      header_seen = true;
      continue;
    }
    if (first_data.empty()) first_data = line;
    ++rows;
  }
  CHECK(header_seen);
  CHECK(rows == 2);
  CHECK(first_data.rfind("roram,2,40,", 0) == 0);
}

TEST_CASE("bad bench options are rejected") {
  BenchOptions o = tiny();
  o.samples = 0;
  CHECK_THROWS_AS(bench_range_grid(o), Error);
  o = tiny();
  o.write_fraction = 1.5;
  CHECK_THROWS_AS(bench_variant_compare(o), Error);
  o = tiny();
  o.sweep_intervals_ms = {3'000};  // 20s span not divisible
  CHECK_THROWS_AS(bench_interval_sweep(o), Error);
}
