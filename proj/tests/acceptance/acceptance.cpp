// Acceptance gate. Each criterion prints one pass/fail line with the
// measured numbers; the exit code is the number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "timeclave/bench.hpp"
#include "timeclave/client.hpp"
#include "timeclave/errors.hpp"
#include "timeclave/roram.hpp"
#include "timeclave/service.hpp"
#include "timeclave/summary.hpp"
#include "timeclave/trace.hpp"
#include "timeclave/tsengine.hpp"

using namespace timeclave;

namespace {

int failures = 0;

using Clock = std::chrono::steady_clock;

double secs_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void report(int idx, bool ok, const std::string& text) {
  std::printf("[%s] %2d. %s\n", ok ? "PASS" : "FAIL", idx, text.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(double v, int prec = 2) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(prec);
  s << v;
  return s.str();
}

std::vector<std::byte> pattern(std::uint64_t id, std::uint64_t v,
                               std::uint32_t b) {
  std::vector<std::byte> out(b);
  std::mt19937_64 gen(id * 1000003 + v);
  for (auto& x : out) x = static_cast<std::byte>(gen());
  return out;
}

// 1. Randomized read/write runs against an associative-array oracle.
void criterion_1() {
  const auto t0 = Clock::now();
  bool ok = true;
  std::uint64_t ops = 0;
  for (std::uint64_t n : {std::uint64_t{1} << 6, std::uint64_t{1} << 10}) {
    for (std::uint32_t r : {1u, 4u, 32u}) {
      RoOramConfig cfg;
      cfg.n = n;
      cfg.b = 40;
      cfg.z = 4;
      cfg.r = r;
      cfg.seed = 42 + r;
      cfg.mode = EvictionMode::inline_batch;
      RoOram oram(cfg);
      std::map<std::uint64_t, std::vector<std::byte>> oracle;
      std::mt19937_64 gen(n * 31 + r);
      std::vector<std::byte> buf(cfg.b);
      for (int i = 0; i < 10'000; ++i, ++ops) {
        const std::uint64_t id = gen() % n;
        if (gen() % 2 == 0) {
          const auto v = pattern(id, static_cast<std::uint64_t>(i), cfg.b);
          oram.write(id, v);
          oracle[id] = v;
        } else {
          const bool found = oram.read(id, buf);
          const auto it = oracle.find(id);
          if (found != (it != oracle.end()))
            ok = false;
          else if (found && !std::equal(buf.begin(), buf.end(),
                                        it->second.begin()))
            ok = false;
        }
      }
    }
  }
  const double s = secs_since(t0);
  ok = ok && s < 60.0;
  report(1, ok,
         "roram matches the block oracle over " + std::to_string(ops) +
             " ops, 6 configs (" + fmt(s, 1) + "s, limit 60s)");
}

// 2. Merged block aggregates match brute force over the raw points.
void criterion_2() {
  const auto t0 = Clock::now();
  std::mt19937_64 gen(7);
  std::normal_distribution<double> value(3.0, 40.0);
  bool ok = true;
  const Agg all[] = {Agg::count, Agg::sum,  Agg::sum_sq, Agg::min,
                     Agg::max,   Agg::mean, Agg::variance, Agg::stdv};

  auto brute = [](Agg f, const std::vector<DataPoint>& pts) {
    double n = 0, sum = 0, sum_sq = 0, lo = 0, hi = 0;
    for (const DataPoint& p : pts) {
      if (n == 0) lo = hi = p.value;
      n += 1;
      sum += p.value;
      sum_sq += p.value * p.value;
      lo = std::min(lo, p.value);
      hi = std::max(hi, p.value);
    }
    switch (f) {
      case Agg::count: return n;
      case Agg::sum: return sum;
      case Agg::sum_sq: return sum_sq;
      case Agg::min: return lo;
      case Agg::max: return hi;
      case Agg::mean: return sum / n;
      case Agg::variance: return sum_sq / n - (sum / n) * (sum / n);
      case Agg::stdv:
        return std::sqrt(std::max(0.0, sum_sq / n - (sum / n) * (sum / n)));
    }
    return 0.0;
  };
  auto close = [](double a, double b, double tol) {
    return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
  };

  int rounds = 0;
  for (; rounds < 1000 && ok; ++rounds) {
    const std::size_t count = gen() % 200;
    std::vector<DataPoint> pts(count);
    for (auto& p : pts) p = {gen() % 10'000, value(gen)};

    // Random partition into 1..8 blocks.
    const std::size_t parts = 1 + gen() % 8;
    std::vector<SummaryBlock> blocks;
    std::size_t at = 0;
    for (std::size_t k = 0; k < parts; ++k) {
      const std::size_t left = pts.size() - at;
      std::size_t take = k + 1 == parts ? left : gen() % (left + 1);
      blocks.push_back(seal_interval(
          std::span(pts).subspan(at, take), k * 10'000, 10'000));
      at += take;
    }

    for (Agg f : all) {
      double merged = 0;
      bool merged_empty = false;
      try {
        merged = merge(f, blocks);
      } catch (const Error& e) {
        if (e.code() != Errc::empty_range) throw;
        merged_empty = true;
      }
      if (pts.empty() && f != Agg::count && f != Agg::sum &&
          f != Agg::sum_sq) {
        if (!merged_empty) ok = false;
        continue;
      }
      if (merged_empty) {
        ok = false;
        continue;
      }
      const double tol =
          (f == Agg::variance || f == Agg::stdv) ? 1e-6 : 1e-9;
      if (!close(merged, brute(f, pts), tol)) ok = false;
    }
  }
  report(2, ok,
         "merged aggregates match brute force over " +
             std::to_string(rounds) + " random partitions (" +
             fmt(secs_since(t0), 1) + "s)");
}

// 3. Query plans for the two reference interval ladders.
void criterion_3() {
  EngineConfig cfg;
  cfg.epoch_base = 0;
  cfg.retention_ms = 86'400'000;
  cfg.store = StoreKind::plain;
  cfg.intervals_ms = {10'000, 60'000};
  const std::size_t two = Engine(cfg).plan_query(0, 70'000).entries.size();
  cfg.intervals_ms = {10'000};
  const std::size_t seven = Engine(cfg).plan_query(0, 70'000).entries.size();
  report(3, two == 2 && seven == 7,
         "plan [0,70s) uses " + std::to_string(two) +
             " blocks on the 10s/60s ladder and " + std::to_string(seven) +
             " on 10s alone (want 2 and 7)");
}

// 4. Tree geometry and payload memory at one day of 10s intervals.
void criterion_4() {
  EngineConfig ecfg;
  ecfg.epoch_base = 0;
  ecfg.retention_ms = 86'400'000;
  ecfg.intervals_ms = {10'000};
  ecfg.store = StoreKind::plain;
  const std::uint64_t blocks = Engine(ecfg).blocks_per_level(0);

  RoOramConfig cfg;
  cfg.n = 8640;
  cfg.b = 40;
  cfg.z = 4;
  cfg.r = 16;
  cfg.seed = 1;
  RoOram oram(cfg);
  const double mem = static_cast<double>(oram.memory_bytes());
  const double rel = std::abs(mem - 5.0e6) / 5.0e6;
  report(4, blocks == 8640 && oram.height() == 13 && rel <= 0.05,
         "24h at 10s gives " + std::to_string(blocks) + " blocks, L=" +
             std::to_string(oram.height()) + ", both-trees payload " +
             fmt(mem / 1e6) + " MB (5.0 MB +/- 5%)");
}

// 5. Pairwise-distinct read paths per eviction window on a hot block.
void criterion_5() {
  const auto t0 = Clock::now();
  bool ok = true;
  std::uint64_t reads = 0, windows = 0;
  for (std::uint32_t r : {4u, 32u}) {
    TraceBuffer trace;
    RoOramConfig cfg;
    cfg.n = 1 << 10;
    cfg.b = 40;
    cfg.z = 4;
    cfg.r = r;
    cfg.seed = 9 + r;
    cfg.mode = EvictionMode::inline_batch;
    RoOram oram(cfg, &trace);
    oram.write(7, pattern(7, 0, cfg.b));
    std::vector<std::byte> buf(cfg.b);
    for (int i = 0; i < 100'000; ++i) oram.read(7, buf);
    const DistinctPathReport rep = check_distinct_paths(trace);
    ok = ok && rep.ok && rep.violations == 0 && rep.path_reads >= 100'000;
    reads += rep.path_reads;
    windows += rep.windows;
  }
  report(5, ok,
         "hot-block workload, R in {4,32}: 0 duplicate paths in " +
             std::to_string(windows) + " windows over " +
             std::to_string(reads) + " path reads (" + fmt(secs_since(t0), 1) +
             "s)");
}

// 6. Shape signatures ignore contents; read leaves are uniform.
void criterion_6() {
  auto run_shape = [](std::uint64_t workload_seed) {
    TraceBuffer trace;
    RoOramConfig cfg;
    cfg.n = 256;
    cfg.b = 8;
    cfg.z = 4;
    cfg.r = 8;
    cfg.seed = 5;
    cfg.mode = EvictionMode::inline_batch;
    RoOram oram(cfg, &trace);
    std::mt19937_64 gen(workload_seed);
    std::vector<std::byte> buf(8);
    for (int t = 0; t < 2'000; ++t) {
      const std::uint64_t id = gen() % 256;
      if (t % 10 < 4 || t % 10 == 5 || t % 10 == 9)
        oram.write(id, pattern(id, static_cast<std::uint64_t>(t), 8));
      else
        oram.read(id, buf);
    }
    return trace.shape();
  };
  const std::string a = run_shape(1001);
  const std::string b = run_shape(2002);

  TraceBuffer trace;
  RoOramConfig cfg;
  cfg.n = 1 << 10;
  cfg.b = 40;
  cfg.z = 4;
  cfg.r = 8;
  cfg.seed = 6;
  cfg.mode = EvictionMode::inline_batch;
  RoOram oram(cfg, &trace);
  std::mt19937_64 gen(12);
  std::vector<std::byte> buf(cfg.b);
  for (int i = 0; i < 12'000; ++i) oram.read(gen() % cfg.n, buf);
  const UniformityReport u = check_uniformity(trace, 0.01);

  report(6, a == b && !a.empty() && u.ok && u.samples >= 10'000,
         "shape signatures byte-identical across contents; leaf chi2 p=" +
             fmt(u.p_value, 4) + " over " + std::to_string(u.samples) +
             " reads (need p > 0.01)");
}

// 7. Full structural audit after every eviction of a randomized run.
void criterion_7() {
  const auto t0 = Clock::now();
  RoOramConfig cfg;
  cfg.n = 1 << 10;
  cfg.b = 40;
  cfg.z = 4;
  cfg.r = 8;
  cfg.seed = 13;
  cfg.mode = EvictionMode::inline_batch;
  RoOram oram(cfg);
  std::mt19937_64 gen(14);
  std::vector<std::byte> buf(cfg.b);
  bool ok = true;
  std::uint64_t audits = 0, last_evictions = 0;
  for (int i = 0; i < 10'000 && ok; ++i) {
    const std::uint64_t id = gen() % cfg.n;
    if (gen() % 4 == 0)
      oram.write(id, pattern(id, static_cast<std::uint64_t>(i), cfg.b));
    else
      oram.read(id, buf);
    if (oram.evictions() != last_evictions) {
      last_evictions = oram.evictions();
      try {
        oram.audit();
        ++audits;
      } catch (const Error&) {
        ok = false;
      }
    }
  }
  ok = ok && audits >= 10'000 / cfg.r / 2;
  report(7, ok,
         "placement/sync audit clean after all " + std::to_string(audits) +
             " evictions of a 10^4-op run (" + fmt(secs_since(t0), 1) + "s)");
}

// 8. Read-heavy throughput, batched twin-tree store vs the baseline.
void criterion_8() {
  const auto t0 = Clock::now();
  BenchOptions opt;
  opt.n = std::uint64_t{1} << 14;
  opt.r = 32;
  opt.workers = 4;
  opt.ops = 8'000;
  opt.write_fraction = 0.05;
  opt.variants = {StoreKind::roram, StoreKind::pathoram};
  const BenchReport rep = bench_variant_compare(opt);
  const double ratio = rep.rows[0].throughput_ops / rep.rows[1].throughput_ops;
  report(8, ratio >= 1.2,
         "95%-read throughput roram/pathoram = " + fmt(ratio) +
             " (need >= 1.2; " + fmt(rep.rows[0].throughput_ops / 1e3, 1) +
             "k vs " + fmt(rep.rows[1].throughput_ops / 1e3, 1) +
             "k ops/s, 4 workers on this host, " + fmt(secs_since(t0), 1) +
             "s)");
}

// 9. Latency grows with the query range, never shrinks with block size.
void criterion_9() {
  const auto t0 = Clock::now();
  BenchOptions opt;
  opt.n = std::uint64_t{1} << 14;
  opt.r = 32;
  opt.samples = 200;
  opt.variants = {StoreKind::roram};
  const BenchReport rep = bench_range_grid(opt);

  // Rows are grouped by block size, ranges ascending within each group.
  const std::size_t nr = opt.ranges.size();
  bool range_up = true, block_up = true;
  for (std::size_t bi = 0; bi < opt.block_sizes.size(); ++bi)
    for (std::size_t ri = 1; ri < nr; ++ri)
      if (rep.rows[bi * nr + ri].p50_us <= rep.rows[bi * nr + ri - 1].p50_us)
        range_up = false;
  for (std::size_t ri = 0; ri < nr; ++ri)
    for (std::size_t bi = 1; bi < opt.block_sizes.size(); ++bi)
      if (rep.rows[bi * nr + ri].p50_us < rep.rows[(bi - 1) * nr + ri].p50_us)
        block_up = false;

  report(9, range_up && block_up,
         std::string("p50 latency strictly increasing in range (") +
             (range_up ? "yes" : "no") + "), non-decreasing in block size (" +
             (block_up ? "yes" : "no") + ") over the 6x5 grid (" +
             fmt(secs_since(t0), 1) + "s)");
}

// 10. Coarser aggregation intervals answer a fixed span faster.
void criterion_10() {
  const auto t0 = Clock::now();
  BenchOptions opt;
  opt.samples = 30;
  opt.sweep_intervals_ms = {1'000, 20'000};
  opt.sweep_span_ms = 600'000;
  const BenchReport rep = bench_interval_sweep(opt);
  const double fine = rep.rows[0].p50_us;
  const double coarse = rep.rows[1].p50_us;
  const double speedup = fine / coarse;
  report(10, speedup >= 10.0,
         "10-minute span: T=1s takes " + fmt(fine, 0) + "us, T=20s takes " +
             fmt(coarse, 0) + "us, speedup " + fmt(speedup, 1) +
             "x (need >= 10x, " + fmt(secs_since(t0), 1) + "s)");
}

// 11. Encrypted ingest and query end to end; tampering kills the session.
void criterion_11() {
  const auto t0 = Clock::now();
  bool ok = true;

  const ChannelKey key = random_key();
  ServiceConfig cfg;
  cfg.listen_addr = "127.0.0.1:0";
  cfg.epoch_base = 0;
  cfg.retention_ms = 86'400'000;
  cfg.intervals_ms = {10'000, 60'000};
  cfg.store = StoreKind::roram;
  cfg.z = 4;
  cfg.r = 16;
  cfg.seed = 21;
  cfg.mode = EvictionMode::background;
  Service svc(cfg, key);
  svc.start();
  const std::string addr = "127.0.0.1:" + std::to_string(svc.port());

  std::mt19937_64 gen(22);
  std::normal_distribution<double> value(0.0, 10.0);
  std::vector<DataPoint> pts;
  for (std::uint64_t ts = 0; ts <= 70'000; ts += 500)
    pts.push_back({ts, value(gen)});

  {
    Client client(addr, key);
    ok = ok && client.ingest(pts) == static_cast<double>(pts.size());

    auto brute = [&](Agg f, std::uint64_t a, std::uint64_t b) {
      std::vector<DataPoint> in;
      for (const DataPoint& p : pts)
        if (p.ts >= a && p.ts < b) in.push_back(p);
      const SummaryBlock blk = seal_interval(in, a, b - a);
      return extract(blk, f);
    };
    for (Agg f : {Agg::count, Agg::sum, Agg::mean, Agg::min, Agg::max,
                  Agg::variance}) {
      const double got = client.query(f, 0, 70'000);
      const double want = brute(f, 0, 70'000);
      const double tol = f == Agg::variance ? 1e-6 : 1e-9;
      if (std::abs(got - want) >
          tol * std::max({1.0, std::abs(got), std::abs(want)}))
        ok = false;
    }
    const double got = client.query(Agg::sum, 10'000, 60'000);
    const double want = brute(Agg::sum, 10'000, 60'000);
    if (std::abs(got - want) > 1e-9 * std::max(1.0, std::abs(want)))
      ok = false;
  }

  {
    // Tamper with a fresh frame: bumped nonce counter, stale tag. The
    // server must close without any reply.
    Client client(addr, key);
    const DataPoint one{70'500, 1.0};  // past the sealed frontier
    ok = ok && client.ingest(std::span(&one, 1)) == 1.0;
    std::vector<std::byte> frame = client.last_sent();
    frame[11] = std::byte{9};
    client.send_raw(frame);
    std::vector<std::byte> reply;
    if (client.read_raw(reply)) ok = false;
  }
  {
    Client client(addr, key);
    const DataPoint one{71'000, 2.0};
    if (client.ingest(std::span(&one, 1)) != 1.0) ok = false;
  }
  svc.stop();

  report(11, ok,
         "encrypted ingest of " + std::to_string(pts.size()) +
             " points reproduces oracle answers; tampered frame closes the "
             "connection without a reply (" + fmt(secs_since(t0), 1) + "s)");
}

}  // namespace

int main() {
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  criterion_9();
  criterion_10();
  criterion_11();
  std::printf("acceptance: %d/11 criteria passed\n", 11 - failures);
  return failures;
}
