#include <doctest.h>

#include <unistd.h>

#include <cstdio>
#include <random>
#include <string>

#include "timeclave/errors.hpp"
#include "timeclave/trace.hpp"

using namespace timeclave;

namespace {

struct TmpFile {
  std::string path;
  explicit TmpFile(const char* stem)
      : path(std::string("/tmp/") + stem + "_" +
             std::to_string(::getpid()) + ".otrc") {}
  ~TmpFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("save and load round-trip every field") {
  TraceBuffer t;
  t.bind(1024, 4, 8, 9);
  t.op_begin(TraceOpKind::read, hash_arg(42));
  t.event(TraceEventKind::path_read, 17);
  t.event(TraceEventKind::stash_sweep, 320);
  t.op_begin(TraceOpKind::evict, 0);
  t.event(TraceEventKind::bucket_write, 5);
  t.event(TraceEventKind::sync_copy, kSyncMarker);

  TmpFile f("roundtrip");
  t.save(f.path);
  const TraceBuffer u = TraceBuffer::load(f.path);

  CHECK(u.n() == 1024);
  CHECK(u.z() == 4);
  CHECK(u.r() == 8);
  CHECK(u.l() == 9);
  REQUIRE(u.ops().size() == 2);
  REQUIRE(u.events().size() == 4);
  CHECK(u.ops()[0].kind == static_cast<std::uint8_t>(TraceOpKind::read));
  CHECK(u.ops()[0].arg_hash == hash_arg(42));
  CHECK(u.ops()[0].first_seq == 0);
  CHECK(u.ops()[1].first_seq == 2);
  CHECK(u.events()[0].index == 17);
  CHECK(u.events()[3].index == kSyncMarker);
  CHECK(u.events()[3].seq == 3);
  CHECK(u.shape() == t.shape());
}

TEST_CASE("load rejects junk and truncation") {
  TmpFile f("junk");
  {
    std::FILE* fp = std::fopen(f.path.c_str(), "wb");
    std::fwrite("not a trace", 1, 11, fp);
    std::fclose(fp);
  }
  CHECK_THROWS_AS(TraceBuffer::load(f.path), Error);

  TraceBuffer t;
  t.bind(16, 2, 2, 3);
  t.op_begin(TraceOpKind::read, 1);
  t.event(TraceEventKind::path_read, 0);
  t.save(f.path);
  {
    // Chop the last byte off.
    std::FILE* fp = std::fopen(f.path.c_str(), "rb");
    std::string raw;
    char buf[256];
    std::size_t got;
    while ((got = std::fread(buf, 1, sizeof buf, fp)) > 0) raw.append(buf, got);
    std::fclose(fp);
    fp = std::fopen(f.path.c_str(), "wb");
    std::fwrite(raw.data(), 1, raw.size() - 1, fp);
    std::fclose(fp);
  }
  CHECK_THROWS_AS(TraceBuffer::load(f.path), Error);
  CHECK_THROWS_AS(TraceBuffer::load("/tmp/definitely_missing_9q1.otrc"), Error);
}

TEST_CASE("shape is one line per op with event letters") {
  TraceBuffer t;
  t.op_begin(TraceOpKind::read, 1);
  t.event(TraceEventKind::path_read, 0);
  t.event(TraceEventKind::posmap_walk, 0);
  t.op_begin(TraceOpKind::write, 2);
  t.event(TraceEventKind::dummy_path_read, 1);
  t.op_begin(TraceOpKind::evict, 0);
  t.event(TraceEventKind::bucket_write, 0);
  t.event(TraceEventKind::fake_bucket_access, 0);
  t.event(TraceEventKind::stash_sweep, 4);
  t.event(TraceEventKind::sync_copy, kSyncMarker);
  CHECK(t.shape() == "Rpm\nWd\nEwfsy\n");
}

TEST_CASE("distinct-path checker flags repeats inside a window") {
  TraceBuffer t;
  t.bind(64, 4, 4, 5);
  auto read = [&](std::uint64_t leaf) {
    t.op_begin(TraceOpKind::read, 0);
    t.event(TraceEventKind::path_read, leaf);
  };
  auto close_window = [&] {
    t.op_begin(TraceOpKind::evict, 0);
    t.event(TraceEventKind::sync_copy, kSyncMarker);
  };

  read(3);
  read(9);
  close_window();
  read(9);  // fine: new window
  read(12);
  close_window();
  auto rep = check_distinct_paths(t);
  CHECK(rep.ok);
  CHECK(rep.windows == 2);
  CHECK(rep.path_reads == 4);

  read(7);
  read(7);  // repeat within the open window
  close_window();
  rep = check_distinct_paths(t);
  CHECK_FALSE(rep.ok);
  CHECK(rep.violations == 1);
  CHECK(rep.windows == 3);
}

TEST_CASE("uniformity check needs enough samples") {
  TraceBuffer t;
  t.bind(256, 4, 4, 7);
  for (int i = 0; i < 100; ++i) {
    t.op_begin(TraceOpKind::read, 0);
    t.event(TraceEventKind::path_read, static_cast<std::uint64_t>(i % 128));
  }
  CHECK_THROWS_AS(check_uniformity(t, 0.01), Error);
  try {
    check_uniformity(t, 0.01);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::insufficient_samples);
  }
  // A lower floor lets the same trace through.
  const auto rep = check_uniformity(t, 0.01, 100);
  CHECK(rep.samples == 100);
  CHECK(rep.cells == 128);
}

TEST_CASE("uniformity separates uniform from skewed draws") {
  TraceBuffer uniform;
  uniform.bind(256, 4, 4, 7);
  std::mt19937_64 gen(99);
  for (int i = 0; i < 20000; ++i) {
    uniform.op_begin(TraceOpKind::read, 0);
    uniform.event(TraceEventKind::path_read, gen() % 128);
  }
  const auto good = check_uniformity(uniform, 0.01);
  CHECK(good.ok);
  CHECK(good.p_value > 0.01);

  TraceBuffer skewed;
  skewed.bind(256, 4, 4, 7);
  for (int i = 0; i < 20000; ++i) {
    // Leaf 0 drawn twice as often as the rest.
    const std::uint64_t leaf = (gen() % 129) % 128;
    skewed.op_begin(TraceOpKind::read, 0);
    skewed.event(TraceEventKind::path_read, leaf);
  }
  const auto bad = check_uniformity(skewed, 0.01);
  CHECK_FALSE(bad.ok);
  CHECK(bad.p_value <= 0.01);
}
