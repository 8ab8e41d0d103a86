#include "timeclave/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <random>
#include <thread>

#include "timeclave/errors.hpp"

namespace timeclave {

const char kBenchCsvHeader[] =
    "variant,range,block_bytes,p50_us,p95_us,throughput_ops";

const char* bench_variant_label(StoreKind k) {
  switch (k) {
    case StoreKind::roram:
      return "roram";
    case StoreKind::pathoram:
      return "pathoram-baseline";
    case StoreKind::plain:
      return "nonoblivious";
  }
  return "?";
}

namespace {

using Clock = std::chrono::steady_clock;

double us_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::micro>(Clock::now() - t0).count();
}

struct Percentiles {
  double p50 = 0, p95 = 0;
};

// Nearest-rank on the sorted samples.
Percentiles percentiles(std::vector<double>& us) {
  if (us.empty()) return {};
  std::sort(us.begin(), us.end());
  auto at = [&](double q) {
    return us[static_cast<std::size_t>(q * static_cast<double>(us.size() - 1))];
  };
  return {at(0.50), at(0.95)};
}

void check_options(const BenchOptions& opt) {
  if (opt.n == 0 || opt.samples == 0 || opt.ops == 0 || opt.workers == 0)
    fail(Errc::invalid_param, "bench options must be positive");
  if (opt.write_fraction < 0.0 || opt.write_fraction > 1.0)
    fail(Errc::invalid_param, "write fraction must be in [0, 1]");
}

// A few writes so reads return real payloads. Read cost does not depend on
// written-ness (oblivious stores walk the full path either way), so a small
// prefill is enough.
void prefill(IBlockStore& s, std::uint64_t n, std::uint32_t b,
             std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::vector<std::byte> buf(b);
  const std::uint64_t count = std::min<std::uint64_t>(n, 1024);
  for (std::uint64_t i = 0; i < count; ++i) {
    for (auto& x : buf) x = static_cast<std::byte>(gen());
    s.write(gen() % n, buf);
  }
}

// Reads `range` consecutive ids starting at a random block, `samples` times.
// Returns per-query latencies and fills *reads_per_sec.
std::vector<double> time_range_reads(IBlockStore& s, std::uint64_t n,
                                     std::uint32_t b, std::uint32_t range,
                                     std::uint32_t samples,
                                     std::mt19937_64& gen,
                                     double* reads_per_sec) {
  std::vector<std::byte> buf(b);
  const std::uint64_t span = n > range ? n - range : 1;
  // Warmup, outside the timed window.
  for (std::uint32_t i = 0; i < range; ++i) s.read(gen() % n, buf);
  std::vector<double> lat;
  lat.reserve(samples);
  const auto t0 = Clock::now();
  for (std::uint32_t k = 0; k < samples; ++k) {
    const std::uint64_t start = gen() % span;
    const auto q0 = Clock::now();
    for (std::uint32_t i = 0; i < range; ++i) s.read(start + i, buf);
    lat.push_back(us_since(q0));
  }
  *reads_per_sec =
      1e6 * static_cast<double>(samples) * range / us_since(t0);
  return lat;
}

}  // namespace

BenchReport bench_range_grid(const BenchOptions& opt) {
  check_options(opt);
  BenchReport rep;
  rep.workload = "range-grid";
  rep.note =
      "query = read `range` consecutive blocks; single worker, block sizes "
      "measured in interleaved rounds on one id schedule";
  for (StoreKind kind : opt.variants) {
    // One store per block size, all alive at once and measured in
    // round-robin chunks on the same id schedule, so clock drift and cache
    // warmth land on every size column equally.
    std::vector<std::unique_ptr<IBlockStore>> stores;
    for (std::uint32_t b : opt.block_sizes) {
      stores.push_back(make_store(kind, opt.n, b, opt.z, opt.r, opt.seed,
                                  EvictionMode::inline_batch));
      prefill(*stores.back(), opt.n, b, opt.seed);
    }
    std::vector<std::vector<BenchRow>> rows_by_b(opt.block_sizes.size());
    std::mt19937_64 gen(opt.seed * 7919 + 17);
    for (std::uint32_t range : opt.ranges) {
      // Short queries need more samples for a stable p50; total read work
      // per cell stays roughly constant across the range axis.
      const std::uint64_t cap = std::max<std::uint64_t>(4000, opt.samples);
      const std::uint32_t eff = static_cast<std::uint32_t>(std::min(
          cap, std::max<std::uint64_t>(
                   opt.samples, std::uint64_t{opt.samples} * 50 /
                                    std::max(1u, range))));
      const std::uint64_t span = opt.n > range ? opt.n - range : 1;
      std::vector<std::uint64_t> starts(eff);
      for (auto& s : starts) s = gen() % span;

      std::vector<std::vector<double>> lat(stores.size());
      std::vector<std::vector<std::byte>> bufs(stores.size());
      for (std::size_t bi = 0; bi < stores.size(); ++bi) {
        lat[bi].reserve(eff);
        bufs[bi].resize(opt.block_sizes[bi]);
        for (std::uint32_t i = 0; i < range; ++i)
          stores[bi]->read(starts[0] + i, bufs[bi]);  // warmup, untimed
      }
      // Sample-level round robin: query k runs against every store before
      // k+1 starts, so slow moments hit the size columns as pairs, and the
      // shared schedule keeps eviction boundaries on the same k everywhere.
      for (std::uint32_t k = 0; k < eff; ++k) {
        for (std::size_t bi = 0; bi < stores.size(); ++bi) {
          const auto q0 = Clock::now();
          for (std::uint32_t i = 0; i < range; ++i)
            stores[bi]->read(starts[k] + i, bufs[bi]);
          lat[bi].push_back(us_since(q0));
        }
      }
      for (std::size_t bi = 0; bi < stores.size(); ++bi) {
        const Percentiles p = percentiles(lat[bi]);
        double busy_us = 0;
        for (double v : lat[bi]) busy_us += v;
        rows_by_b[bi].push_back({bench_variant_label(kind), range,
                                 opt.block_sizes[bi], p.p50, p.p95,
                                 1e6 * static_cast<double>(eff) * range /
                                     busy_us});
      }
    }
    // Row order stays grouped by block size, ranges ascending within each.
    for (auto& v : rows_by_b)
      rep.rows.insert(rep.rows.end(), v.begin(), v.end());
  }
  return rep;
}

BenchReport bench_eviction_sweep(const BenchOptions& opt) {
  check_options(opt);
  BenchReport rep;
  rep.workload = "eviction-sweep";
  rep.note =
      "roram only; `range` column carries the eviction batch R, the query "
      "range is fixed at 32 blocks";
  const std::uint32_t q_range = 32;
  const std::uint32_t b = opt.fixed_block_bytes;
  for (std::uint32_t r : opt.evict_batches) {
    auto store = make_store(StoreKind::roram, opt.n, b, opt.z, r, opt.seed,
                            EvictionMode::inline_batch);
    prefill(*store, opt.n, b, opt.seed);
    std::mt19937_64 gen(opt.seed * 7919 + r);
    double rps = 0;
    std::vector<double> lat =
        time_range_reads(*store, opt.n, b, q_range, opt.samples, gen, &rps);
    const Percentiles p = percentiles(lat);
    rep.rows.push_back({"roram", r, b, p.p50, p.p95, rps});
  }
  return rep;
}

BenchReport bench_interval_sweep(const BenchOptions& opt) {
  check_options(opt);
  BenchReport rep;
  rep.workload = "interval-sweep";
  rep.note =
      "one fixed wall-clock span per query; `range` column is the planned "
      "block count (span / interval)";
  for (std::uint64_t t : opt.sweep_intervals_ms) {
    if (t == 0 || opt.sweep_span_ms % t != 0)
      fail(Errc::invalid_param, "sweep span must be a multiple of every interval");
    EngineConfig cfg;
    cfg.epoch_base = 0;
    cfg.retention_ms = opt.sweep_span_ms * 2;
    cfg.intervals_ms = {t};
    cfg.store = StoreKind::roram;
    cfg.z = opt.z;
    cfg.r = 16;
    cfg.seed = opt.seed;
    cfg.mode = EvictionMode::inline_batch;
    Engine eng(cfg);
    for (std::uint64_t ts = 0; ts < opt.sweep_span_ms; ts += 1'000)
      eng.ingest({ts, std::sin(static_cast<double>(ts) * 1e-3)});
    eng.advance(opt.sweep_span_ms);

    std::vector<double> lat;
    lat.reserve(opt.samples);
    const auto t0 = Clock::now();
    for (std::uint32_t k = 0; k < opt.samples; ++k) {
      const auto q0 = Clock::now();
      (void)eng.execute(Agg::mean, 0, opt.sweep_span_ms);
      lat.push_back(us_since(q0));
    }
    const double qps = 1e6 * static_cast<double>(opt.samples) / us_since(t0);
    const Percentiles p = percentiles(lat);
    rep.rows.push_back({"roram",
                        static_cast<std::uint32_t>(opt.sweep_span_ms / t),
                        static_cast<std::uint32_t>(SummaryBlock::kBytes),
                        p.p50, p.p95, qps});
  }
  return rep;
}

BenchReport bench_variant_compare(const BenchOptions& opt) {
  check_options(opt);
  BenchReport rep;
  rep.workload = "variant-throughput";
  rep.note =
      "closed-loop workers, 95% reads; p50/p95 are per-op latencies pooled "
      "across workers";
  const std::uint32_t b = opt.fixed_block_bytes;
  for (StoreKind kind : opt.variants) {
    // Roram synchronises internally and defers eviction to its worker; the
    // baselines are serial structures, so concurrent callers line up on one
    // lock, as they would in any real deployment.
    const bool serial = kind != StoreKind::roram;
    auto store = make_store(
        kind, opt.n, b, opt.z, opt.r, opt.seed,
        serial ? EvictionMode::inline_batch : EvictionMode::background);
    prefill(*store, opt.n, b, opt.seed);

    std::mutex one_at_a_time;
    const std::uint32_t per_worker =
        std::max<std::uint32_t>(1, opt.ops / opt.workers);
    std::vector<std::vector<double>> lat(opt.workers);
    const auto t0 = Clock::now();
    std::vector<std::thread> crew;
    for (std::uint32_t w = 0; w < opt.workers; ++w)
      crew.emplace_back([&, w] {
        std::mt19937_64 gen(opt.seed + 1000 + w);
        std::uniform_real_distribution<double> coin(0.0, 1.0);
        std::vector<std::byte> buf(b);
        auto& mine = lat[w];
        mine.reserve(per_worker);
        for (std::uint32_t i = 0; i < per_worker; ++i) {
          const std::uint64_t id = gen() % opt.n;
          const bool is_write = coin(gen) < opt.write_fraction;
          const auto q0 = Clock::now();
          if (serial) {
            std::lock_guard<std::mutex> g(one_at_a_time);
            if (is_write)
              store->write(id, buf);
            else
              store->read(id, buf);
          } else {
            if (is_write)
              store->write(id, buf);
            else
              store->read(id, buf);
          }
          mine.push_back(us_since(q0));
        }
      });
    for (auto& th : crew) th.join();
    // Deferred eviction debt counts against the throughput window.
    store->drain();
    const double total_us = us_since(t0);

    std::vector<double> all;
    for (auto& v : lat) all.insert(all.end(), v.begin(), v.end());
    const Percentiles p = percentiles(all);
    rep.rows.push_back(
        {bench_variant_label(kind), 1, b, p.p50, p.p95,
         1e6 * static_cast<double>(per_worker) * opt.workers / total_us});
  }
  return rep;
}

std::vector<BenchReport> bench_all(const BenchOptions& opt) {
  return {bench_range_grid(opt), bench_eviction_sweep(opt),
          bench_interval_sweep(opt), bench_variant_compare(opt)};
}

void write_csv(std::ostream& out, const BenchReport& rep) {
  out << "# workload: " << rep.workload << "\n";
  if (!rep.note.empty()) out << "# " << rep.note << "\n";
  out << kBenchCsvHeader << "\n";
  for (const BenchRow& r : rep.rows)
    out << r.variant << ',' << r.range << ',' << r.block_bytes << ','
        << std::fixed << std::setprecision(3) << r.p50_us << ',' << r.p95_us
        << ',' << std::setprecision(1) << r.throughput_ops << "\n";
}

}  // namespace timeclave
