#include <CLI11.hpp>

#include <csignal>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <string>
#include <vector>

#include "timeclave/bench.hpp"
#include "timeclave/client.hpp"
#include "timeclave/config.hpp"
#include "timeclave/errors.hpp"
#include "timeclave/service.hpp"
#include "timeclave/trace.hpp"

using namespace timeclave;

namespace {

constexpr int kOk = 0;
constexpr int kDomainError = 1;
constexpr int kUsageError = 2;

ServiceConfig config_for(const std::string& path) {
  if (!path.empty()) return load_config(path);
  ServiceConfig cfg;
  apply_env_overrides(cfg);
  return cfg;
}

int cmd_init(const std::string& config_path, const std::string& key_path,
             const std::string& listen, bool force) {
  if (!force) {
    if (std::ifstream(config_path))
      fail(Errc::io_error, config_path + " exists; pass --force to replace");
    if (std::ifstream(key_path))
      fail(Errc::io_error, key_path + " exists; pass --force to replace");
  }
  save_key(random_key(), key_path);
  std::ofstream out(config_path);
  if (!out) fail(Errc::io_error, "cannot write " + config_path);
  out << "# timeclave service configuration\n"
      << "listen_addr = " << listen << "\n"
      << "key_file = " << key_path << "\n"
      << "epoch_base = 0\n"
      << "retention = 24h\n"
      << "intervals = 10s, 60s\n"
      << "variant = roram\n"
      << "z = 4\n"
      << "r = 16\n"
      << "mode = background\n"
      << "seed = 1\n";
  std::cout << "wrote " << config_path << " and " << key_path << "\n";
  return kOk;
}

int cmd_serve(const std::string& config_path) {
  // Handler threads inherit the blocked mask; only sigwait below sees these.
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);

  const ServiceConfig cfg = config_for(config_path);
  Service svc(cfg);
  svc.start();
  std::cout << "listening on port " << svc.port() << std::endl;
  int sig = 0;
  sigwait(&set, &sig);
  svc.stop();
  return kOk;
}

// Connection endpoint and key for the client commands: explicit flags win
// over the config file.
Client connect_from(const std::string& config_path, std::string addr,
                    std::string key_path) {
  const ServiceConfig cfg = config_for(config_path);
  if (addr.empty()) addr = cfg.listen_addr;
  if (key_path.empty()) key_path = cfg.key_file;
  return Client(addr, load_key(key_path));
}

// Accepts `ts_ms,value` rows; blank lines, comments, and a header line are
// skipped. Anything else is an error naming the line.
int cmd_ingest(const std::string& config_path, const std::string& addr,
               const std::string& key_path, const std::string& csv_path) {
  std::ifstream file;
  std::istream* in = &std::cin;
  if (csv_path != "-") {
    file.open(csv_path);
    if (!file) fail(Errc::io_error, "cannot open " + csv_path);
    in = &file;
  }

  Client client = connect_from(config_path, addr, key_path);
  std::vector<DataPoint> batch;
  std::uint64_t total = 0;
  auto flush = [&] {
    if (batch.empty()) return;
    total += static_cast<std::uint64_t>(client.ingest(batch));
    batch.clear();
  };

  std::string line;
  std::uint64_t lineno = 0;
  while (std::getline(*in, line)) {
    ++lineno;
    const std::size_t at = line.find_first_not_of(" \t\r");
    if (at == std::string::npos) continue;
    if (line[at] == '#') continue;
    if (!std::isdigit(static_cast<unsigned char>(line[at]))) {
      if (lineno == 1) continue;  // header row
      fail(Errc::invalid_param,
           "line " + std::to_string(lineno) + ": expected ts_ms,value");
    }
    const std::size_t comma = line.find(',', at);
    if (comma == std::string::npos)
      fail(Errc::invalid_param,
           "line " + std::to_string(lineno) + ": expected ts_ms,value");
    std::size_t used = 0;
    DataPoint p{};
    try {
      p.ts = std::stoull(line.substr(at, comma - at), &used);
      p.value = std::stod(line.substr(comma + 1), &used);
    } catch (const std::exception&) {
      fail(Errc::invalid_param,
           "line " + std::to_string(lineno) + ": expected ts_ms,value");
    }
    batch.push_back(p);
    if (batch.size() == 1024) flush();
  }
  flush();
  std::cout << total << "\n";
  return kOk;
}

int cmd_query(const std::string& config_path, const std::string& addr,
              const std::string& key_path, const std::string& f_name,
              std::uint64_t t_a, std::uint64_t t_b) {
  Agg f;
  if (!agg_from_name(f_name.c_str(), &f))
    fail(Errc::invalid_param, "unknown aggregate " + f_name);
  Client client = connect_from(config_path, addr, key_path);
  const double v = client.query(f, t_a, t_b);
  std::cout << std::setprecision(17) << v << "\n";
  return kOk;
}

int cmd_bench(const std::string& workload, const std::string& out_path,
              const std::string& variant, const BenchOptions& base) {
  BenchOptions opt = base;
  if (!variant.empty()) {
    StoreKind k;
    if (!store_kind_from_name(variant.c_str(), &k))
      fail(Errc::invalid_param, "unknown variant " + variant);
    opt.variants = {k};
  }

  std::vector<BenchReport> reports;
  if (workload == "all")
    reports = bench_all(opt);
  else if (workload == "range-grid")
    reports = {bench_range_grid(opt)};
  else if (workload == "eviction-sweep")
    reports = {bench_eviction_sweep(opt)};
  else if (workload == "interval-sweep")
    reports = {bench_interval_sweep(opt)};
  else if (workload == "variant-throughput")
    reports = {bench_variant_compare(opt)};
  else
    fail(Errc::invalid_param, "unknown workload " + workload);

  std::ofstream file;
  std::ostream* out = &std::cout;
  if (!out_path.empty()) {
    file.open(out_path);
    if (!file) fail(Errc::io_error, "cannot write " + out_path);
    out = &file;
  }
  for (std::size_t i = 0; i < reports.size(); ++i) {
    if (i) *out << "\n";
    write_csv(*out, reports[i]);
  }
  return kOk;
}

int cmd_trace_check(const std::string& path) {
  const TraceBuffer t = TraceBuffer::load(path);
  std::cout << "ops: " << t.ops().size() << "  events: " << t.events().size()
            << "\n";
  std::cout << "geometry: n=" << t.n() << " z=" << t.z() << " r=" << t.r()
            << " l=" << t.l() << "\n";

  const DistinctPathReport d = check_distinct_paths(t);
  std::cout << "distinct-paths: " << (d.ok ? "ok" : "VIOLATED") << " ("
            << d.violations << " violations, " << d.windows << " windows, "
            << d.path_reads << " path reads)\n";

  bool uniform_ok = true;
  try {
    const UniformityReport u = check_uniformity(t, 0.01);
    uniform_ok = u.ok;
    std::cout << "uniformity: " << (u.ok ? "ok" : "SKEWED")
              << " (p=" << u.p_value << ", chi2=" << u.chi2
              << ", samples=" << u.samples << ", cells=" << u.cells << ")\n";
  } catch (const Error& e) {
    if (e.code() != Errc::insufficient_samples) throw;
    std::cout << "uniformity: skipped (" << e.what() << ")\n";
  }
  return d.ok && uniform_ok ? kOk : kDomainError;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"timeclave: oblivious time-series store"};
  app.require_subcommand(1);

  std::string config_path, addr, key_path;

  auto* init = app.add_subcommand("init", "write a fresh config and key file");
  std::string init_config = "timeclave.conf";
  std::string init_key = "timeclave.key";
  std::string init_listen = "127.0.0.1:7700";
  bool init_force = false;
  init->add_option("--config", init_config, "config file to write");
  init->add_option("--key", init_key, "key file to write");
  init->add_option("--listen", init_listen, "listen address for the config");
  init->add_flag("--force", init_force, "replace existing files");

  auto* serve = app.add_subcommand("serve", "run the service until SIGINT");
  serve->add_option("--config", config_path, "config file");

  auto* ingest = app.add_subcommand("ingest", "send ts_ms,value CSV rows");
  std::string csv_path;
  ingest->add_option("file", csv_path, "CSV path, or - for stdin")->required();
  ingest->add_option("--config", config_path, "config file");
  ingest->add_option("--addr", addr, "server host:port");
  ingest->add_option("--key", key_path, "key file");

  auto* query = app.add_subcommand("query", "run one aggregate query");
  std::string f_name;
  std::uint64_t t_a = 0, t_b = 0;
  query->add_option("f", f_name, "count|sum|sum_sq|min|max|mean|variance|stdv")
      ->required();
  query->add_option("t_a", t_a, "range start, ms")->required();
  query->add_option("t_b", t_b, "range end, ms")->required();
  query->add_option("--config", config_path, "config file");
  query->add_option("--addr", addr, "server host:port");
  query->add_option("--key", key_path, "key file");

  auto* bench = app.add_subcommand("bench", "run benchmark workloads, emit CSV");
  std::string workload = "all";
  std::string out_path, variant;
  BenchOptions opt;
  bench->add_option("--workload", workload,
                    "all|range-grid|eviction-sweep|interval-sweep|"
                    "variant-throughput");
  bench->add_option("--out", out_path, "CSV file (default stdout)");
  bench->add_option("--variant", variant,
                    "limit to one variant: roram|pathoram|nonoblivious");
  bench->add_option("--n", opt.n, "blocks per store");
  bench->add_option("--samples", opt.samples, "latency samples per cell");
  bench->add_option("--ops", opt.ops, "operations per throughput run");
  bench->add_option("--workers", opt.workers, "closed-loop client workers");
  bench->add_option("--seed", opt.seed, "rng seed");

  auto* check = app.add_subcommand("trace-check", "analyse a saved trace");
  std::string trace_path;
  check->add_option("file", trace_path, "trace file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsageError;
  }

  try {
    if (app.got_subcommand(init))
      return cmd_init(init_config, init_key, init_listen, init_force);
    if (app.got_subcommand(serve)) return cmd_serve(config_path);
    if (app.got_subcommand(ingest))
      return cmd_ingest(config_path, addr, key_path, csv_path);
    if (app.got_subcommand(query))
      return cmd_query(config_path, addr, key_path, f_name, t_a, t_b);
    if (app.got_subcommand(bench))
      return cmd_bench(workload, out_path, variant, opt);
    if (app.got_subcommand(check)) return cmd_trace_check(trace_path);
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return kDomainError;
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return kDomainError;
  }
  return kUsageError;
}
