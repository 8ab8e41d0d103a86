// Python bindings: the oblivious block store, the time-series engine,
// interval summaries and trace checking.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "timeclave/errors.hpp"
#include "timeclave/roram.hpp"
#include "timeclave/summary.hpp"
#include "timeclave/trace.hpp"
#include "timeclave/tsengine.hpp"

namespace py = pybind11;

namespace {

using namespace timeclave;

EvictionMode mode_from(const std::string& s) {
  if (s == "inline") return EvictionMode::inline_batch;
  if (s == "background") return EvictionMode::background;
  fail(Errc::invalid_param, "mode must be 'inline' or 'background'");
}

Agg agg_from(const std::string& s) {
  Agg f;
  if (!agg_from_name(s.c_str(), &f))
    fail(Errc::invalid_param, "unknown aggregate '" + s + "'");
  return f;
}

StoreKind store_from(const std::string& s) {
  StoreKind k;
  if (!store_kind_from_name(s.c_str(), &k))
    fail(Errc::invalid_param, "unknown store '" + s + "'");
  return k;
}

py::dict dict_of(const SummaryBlock& b) {
  py::dict d;
  d["interval_start"] = b.interval_start;
  for (std::uint32_t i = 0; i < kAggCount; ++i)
    d[agg_name(static_cast<Agg>(i))] = b.agg[i];
  return d;
}

py::dict dict_of(const DistinctPathReport& r) {
  py::dict d;
  d["ok"] = r.ok;
  d["windows"] = r.windows;
  d["violations"] = r.violations;
  d["path_reads"] = r.path_reads;
  return d;
}

py::dict dict_of(const UniformityReport& r) {
  py::dict d;
  d["ok"] = r.ok;
  d["p_value"] = r.p_value;
  d["chi2"] = r.chi2;
  d["samples"] = r.samples;
  d["cells"] = r.cells;
  return d;
}

std::vector<DataPoint> points_from(
    const std::vector<std::pair<std::uint64_t, double>>& raw) {
  std::vector<DataPoint> pts;
  pts.reserve(raw.size());
  for (const auto& [ts, v] : raw) pts.push_back({ts, v});
  return pts;
}

// Owns a trace buffer alongside the ORAM so leaf statistics can be pulled
// from python without exporting the sink machinery.
class PyOram {
 public:
  PyOram(std::uint64_t n, std::uint32_t block_bytes, std::uint32_t z,
         std::uint32_t r, std::uint64_t seed, const std::string& mode,
         bool trace) {
    if (trace) trace_ = std::make_unique<TraceBuffer>();
    RoOramConfig cfg;
    cfg.n = n;
    cfg.b = block_bytes;
    cfg.z = z;
    cfg.r = r;
    cfg.seed = seed;
    cfg.mode = mode_from(mode);
    oram_ = std::make_unique<RoOram>(cfg, trace_.get());
  }

  py::object read(std::uint64_t id) {
    std::vector<std::byte> buf(oram_->config().b);
    bool found;
    {
      py::gil_scoped_release off;
      found = oram_->read(id, buf);
    }
    if (!found) return py::none();
    return py::bytes(reinterpret_cast<const char*>(buf.data()), buf.size());
  }

  void write(std::uint64_t id, const py::bytes& payload) {
    const std::string v = payload;
    if (v.size() != oram_->config().b)
      fail(Errc::invalid_param,
           "payload must be exactly " + std::to_string(oram_->config().b) +
               " bytes, got " + std::to_string(v.size()));
    std::vector<std::byte> buf(v.size());
    std::memcpy(buf.data(), v.data(), v.size());
    py::gil_scoped_release off;
    oram_->write(id, buf);
  }

  void evict_now() {
    py::gil_scoped_release off;
    oram_->evict_now();
  }
  void drain() {
    py::gil_scoped_release off;
    oram_->drain();
  }
  void audit() {
    py::gil_scoped_release off;
    oram_->drain();
    oram_->audit();
  }

  std::uint32_t height() const { return oram_->height(); }
  std::uint32_t leaf_count() const { return oram_->leaf_count(); }
  std::uint64_t memory_bytes() const { return oram_->memory_bytes(); }
  std::uint64_t reads() const { return oram_->reads(); }
  std::uint64_t writes() const { return oram_->writes(); }
  std::uint64_t evictions() const { return oram_->evictions(); }
  std::uint32_t stash_fill() const { return oram_->stash_fill(); }

  std::string trace_shape() { return traced().shape(); }
  void save_trace(const std::string& path) { traced().save(path); }
  void clear_trace() { traced().clear(); }
  py::dict check_distinct_paths() {
    return dict_of(::timeclave::check_distinct_paths(traced()));
  }
  py::dict check_uniformity(double alpha, std::uint64_t min_samples) {
    return dict_of(::timeclave::check_uniformity(traced(), alpha, min_samples));
  }

 private:
  // Settles in-flight batches first so the buffer holds complete windows.
  TraceBuffer& traced() {
    if (!trace_)
      fail(Errc::invalid_param, "store was created without trace=True");
    oram_->drain();
    return *trace_;
  }

  std::unique_ptr<TraceBuffer> trace_;  // must outlive the ORAM
  std::unique_ptr<RoOram> oram_;
};

class PyEngine {
 public:
  PyEngine(std::uint64_t epoch_base, std::uint64_t retention_ms,
           const std::vector<std::uint64_t>& intervals_ms,
           const std::string& store, std::uint32_t z, std::uint32_t r,
           std::uint64_t seed, const std::string& mode) {
    EngineConfig cfg;
    cfg.epoch_base = epoch_base;
    cfg.retention_ms = retention_ms;
    cfg.intervals_ms = intervals_ms;
    cfg.store = store_from(store);
    cfg.z = z;
    cfg.r = r;
    cfg.seed = seed;
    cfg.mode = mode_from(mode);
    engine_ = std::make_unique<Engine>(cfg);
  }

  void ingest(const std::vector<std::pair<std::uint64_t, double>>& raw) {
    const std::vector<DataPoint> pts = points_from(raw);
    py::gil_scoped_release off;
    for (const DataPoint& p : pts) engine_->ingest(p);
  }

  void advance(std::uint64_t now_ms) {
    py::gil_scoped_release off;
    engine_->advance(now_ms);
  }

  double execute(const std::string& agg, std::uint64_t t_a, std::uint64_t t_b) {
    const Agg f = agg_from(agg);
    py::gil_scoped_release off;
    return engine_->execute(f, t_a, t_b);
  }

  std::vector<std::pair<std::uint32_t, std::uint64_t>> plan(
      std::uint64_t t_a, std::uint64_t t_b) const {
    const QueryPlan qp = engine_->plan_query(t_a, t_b);
    std::vector<std::pair<std::uint32_t, std::uint64_t>> out;
    out.reserve(qp.entries.size());
    for (const PlanEntry& e : qp.entries) out.emplace_back(e.level, e.block_id);
    return out;
  }

  py::object block(std::uint32_t level, std::uint64_t id) {
    if (level >= engine_->level_count())
      fail(Errc::index_out_of_range, "level out of range");
    std::array<std::byte, SummaryBlock::kBytes> buf{};
    bool found;
    {
      py::gil_scoped_release off;
      found = engine_->store(level).read(id, buf);
    }
    if (!found) return py::none();
    return dict_of(SummaryBlock::load(buf));
  }

  std::uint32_t level_count() const { return engine_->level_count(); }
  std::uint64_t blocks_per_level(std::uint32_t level) const {
    if (level >= engine_->level_count())
      fail(Errc::index_out_of_range, "level out of range");
    return engine_->blocks_per_level(level);
  }
  std::uint64_t frontier(std::uint32_t level) const {
    if (level >= engine_->level_count())
      fail(Errc::index_out_of_range, "level out of range");
    return engine_->frontier(level);
  }
  std::uint64_t sealed_blocks() const { return engine_->sealed_blocks(); }
  std::size_t buffered_points() const { return engine_->buffered_points(); }

 private:
  std::unique_ptr<Engine> engine_;
};

py::dict summarize(const std::vector<std::pair<std::uint64_t, double>>& raw,
                   std::uint64_t t_start, std::uint64_t interval_ms) {
  const std::vector<DataPoint> pts = points_from(raw);
  return dict_of(seal_interval(pts, t_start, interval_ms));
}

py::dict trace_check(const std::string& path, double alpha,
                     std::uint64_t min_samples) {
  const TraceBuffer t = TraceBuffer::load(path);
  py::dict d;
  d["n"] = t.n();
  d["z"] = t.z();
  d["r"] = t.r();
  d["l"] = t.l();
  d["ops"] = t.ops().size();
  d["events"] = t.events().size();
  d["distinct"] = dict_of(check_distinct_paths(t));
  try {
    d["uniformity"] = dict_of(check_uniformity(t, alpha, min_samples));
  } catch (const Error& e) {
    if (e.code() != Errc::insufficient_samples) throw;
    d["uniformity"] = py::none();
  }
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() =
      "Oblivious time-series storage: batched dual-tree ORAM, aggregation "
      "ladder, trace checks";

  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      switch (e.code()) {
        case Errc::invalid_param:
        case Errc::config_error:
        case Errc::unaligned_range:
        case Errc::non_finite_value:
          PyErr_SetString(PyExc_ValueError, e.what());
          break;
        case Errc::index_out_of_range:
          PyErr_SetString(PyExc_IndexError, e.what());
          break;
        case Errc::io_error:
          PyErr_SetString(PyExc_OSError, e.what());
          break;
        default:
          PyErr_SetString(PyExc_RuntimeError, e.what());
      }
    }
  });

  py::class_<PyOram>(m, "Oram",
                     "Oblivious block store with batched eviction. read() "
                     "returns None for never-written ids.")
      .def(py::init<std::uint64_t, std::uint32_t, std::uint32_t,
                    std::uint32_t, std::uint64_t, const std::string&, bool>(),
           py::arg("n"), py::arg("block_bytes"), py::arg("z") = 4,
           py::arg("r") = 8, py::arg("seed") = 1, py::arg("mode") = "inline",
           py::arg("trace") = false)
      .def("read", &PyOram::read, py::arg("id"))
      .def("write", &PyOram::write, py::arg("id"), py::arg("payload"))
      .def("evict_now", &PyOram::evict_now)
      .def("drain", &PyOram::drain)
      .def("audit", &PyOram::audit,
           "Full structural audit; raises on any violation.")
      .def_property_readonly("height", &PyOram::height)
      .def_property_readonly("leaf_count", &PyOram::leaf_count)
      .def_property_readonly("memory_bytes", &PyOram::memory_bytes)
      .def_property_readonly("reads", &PyOram::reads)
      .def_property_readonly("writes", &PyOram::writes)
      .def_property_readonly("evictions", &PyOram::evictions)
      .def_property_readonly("stash_fill", &PyOram::stash_fill)
      .def("trace_shape", &PyOram::trace_shape,
           "One line per op: op letter plus one letter per event.")
      .def("save_trace", &PyOram::save_trace, py::arg("path"))
      .def("clear_trace", &PyOram::clear_trace)
      .def("check_distinct_paths", &PyOram::check_distinct_paths)
      .def("check_uniformity", &PyOram::check_uniformity,
           py::arg("alpha") = 0.01, py::arg("min_samples") = 10000);

  py::class_<PyEngine>(m, "Engine",
                       "Buffers points, seals one summary block per closed "
                       "interval, answers aggregate queries over [t_a, t_b).")
      .def(py::init<std::uint64_t, std::uint64_t,
                    const std::vector<std::uint64_t>&, const std::string&,
                    std::uint32_t, std::uint32_t, std::uint64_t,
                    const std::string&>(),
           py::arg("epoch_base") = 0,
           py::arg("retention_ms") = 86'400'000,
           py::arg("intervals_ms") = std::vector<std::uint64_t>{10'000},
           py::arg("store") = "roram", py::arg("z") = 4, py::arg("r") = 16,
           py::arg("seed") = 1, py::arg("mode") = "inline")
      .def("ingest", &PyEngine::ingest, py::arg("points"),
           "Points are (ts_ms, value) pairs in timestamp order.")
      .def("advance", &PyEngine::advance, py::arg("now_ms"))
      .def("execute", &PyEngine::execute, py::arg("agg"), py::arg("t_a"),
           py::arg("t_b"))
      .def("plan", &PyEngine::plan, py::arg("t_a"), py::arg("t_b"),
           "Greedy coarsest cover; returns (level, block_id) tiles in time "
           "order.")
      .def("block", &PyEngine::block, py::arg("level"), py::arg("id"),
           "Sealed summary block as a dict, or None if not sealed yet.")
      .def("blocks_per_level", &PyEngine::blocks_per_level, py::arg("level"))
      .def("frontier", &PyEngine::frontier, py::arg("level"))
      .def_property_readonly("level_count", &PyEngine::level_count)
      .def_property_readonly("sealed_blocks", &PyEngine::sealed_blocks)
      .def_property_readonly("buffered_points", &PyEngine::buffered_points);

  m.def("summarize", &summarize, py::arg("points"), py::arg("t_start") = 0,
        py::arg("interval_ms") = 1000,
        "Folds points into one summary block and returns its aggregates.");
  m.def("trace_check", &trace_check, py::arg("path"), py::arg("alpha") = 0.01,
        py::arg("min_samples") = 10000,
        "Loads a saved trace and runs the distinct-path and uniformity "
        "checks. uniformity is None when the trace is too small.");
}
