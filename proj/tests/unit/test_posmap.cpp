#include <doctest.h>

#include <random>
#include <unordered_map>
#include <vector>

#include "timeclave/errors.hpp"
#include "timeclave/posmap.hpp"

using namespace timeclave;

TEST_CASE("flat map: set/get roundtrip against a reference") {
  RecursivePosMap pm({.n = 200, .leaf_count = 512, .seed = 21});
  CHECK(pm.depth() == 0);
  std::unordered_map<std::uint64_t, std::uint32_t> ref;
  std::mt19937_64 gen(22);
  for (int t = 0; t < 10000; ++t) {
    const std::uint64_t id = gen() % 200;
    if (gen() & 1) {
      const auto leaf = static_cast<std::uint32_t>(gen() % 512);
      pm.set(id, leaf);
      ref[id] = leaf;
    } else {
      const auto got = pm.get(id);
      if (ref.count(id))
        CHECK(got == ref[id]);
      else
        CHECK(got < 512);  // initial draw
      CHECK(pm.peek(id) == got);
    }
  }
}

TEST_CASE("unset ids hold a deterministic initial draw under a fixed seed") {
  RecursivePosMap a({.n = 100, .leaf_count = 64, .seed = 5});
  RecursivePosMap b({.n = 100, .leaf_count = 64, .seed = 5});
  RecursivePosMap c({.n = 100, .leaf_count = 64, .seed = 6});
  bool any_diff = false;
  for (std::uint64_t id = 0; id < 100; ++id) {
    CHECK(a.peek(id) == b.peek(id));
    CHECK(a.peek(id) < 64);
    any_diff |= a.peek(id) != c.peek(id);
  }
  CHECK(any_diff);
}

TEST_CASE("one oblivious layer above the flat base") {
  // 5000 ids / fan 64 = 79 blocks, within the flat base.
  RecursivePosMap pm({.n = 5000, .leaf_count = 8192, .seed = 23});
  CHECK(pm.depth() == 1);
  std::unordered_map<std::uint64_t, std::uint32_t> ref;
  std::mt19937_64 gen(24);
  for (int t = 0; t < 8000; ++t) {
    const std::uint64_t id = gen() % 5000;
    if (gen() & 1) {
      const auto leaf = static_cast<std::uint32_t>(gen() % 8192);
      pm.set(id, leaf);
      ref[id] = leaf;
    } else {
      const auto got = pm.get(id);
      if (ref.count(id)) CHECK(got == ref[id]);
      CHECK(got < 8192);
    }
  }
  for (const auto& [id, leaf] : ref) CHECK(pm.peek(id) == leaf);
}

TEST_CASE("two layers once the first tier outgrows the base") {
  // 17000 ids -> 266 blocks -> 5 blocks, so two stacked layers.
  RecursivePosMap pm({.n = 17000, .leaf_count = 8192, .seed = 25});
  CHECK(pm.depth() == 2);
  std::unordered_map<std::uint64_t, std::uint32_t> ref;
  std::mt19937_64 gen(26);
  for (int t = 0; t < 3000; ++t) {
    const std::uint64_t id = gen() % 17000;
    if (gen() & 1) {
      const auto leaf = static_cast<std::uint32_t>(gen() % 8192);
      pm.set(id, leaf);
      ref[id] = leaf;
    } else if (ref.count(id)) {
      CHECK(pm.get(id) == ref[id]);
    }
  }
  for (const auto& [id, leaf] : ref) CHECK(pm.peek(id) == leaf);
}

TEST_CASE("edge ids across block boundaries") {
  RecursivePosMap pm({.n = 5000, .leaf_count = 1024, .seed = 27});
  for (std::uint64_t id : {0ull, 63ull, 64ull, 127ull, 4095ull, 4999ull}) {
    pm.set(id, static_cast<std::uint32_t>(id % 1024));
    CHECK(pm.get(id) == id % 1024);
  }
}

TEST_CASE("dummy access changes nothing and walks the same tiers") {
  RecursivePosMap pm({.n = 5000, .leaf_count = 1024, .seed = 28});
  pm.set(17, 99);
  pm.set(4000, 100);

  std::vector<std::uint32_t> walk_get, walk_set, walk_dummy;
  pm.set_walk_hook([&](std::uint32_t d, std::uint32_t) { walk_get.push_back(d); });
  (void)pm.get(17);
  pm.set_walk_hook([&](std::uint32_t d, std::uint32_t) { walk_set.push_back(d); });
  pm.set(18, 5);
  pm.set_walk_hook([&](std::uint32_t d, std::uint32_t) { walk_dummy.push_back(d); });
  pm.dummy_access();
  pm.set_walk_hook(nullptr);

  CHECK(walk_get == std::vector<std::uint32_t>{0, 1});
  CHECK(walk_set == walk_get);
  CHECK(walk_dummy == walk_get);

  const auto v17 = pm.peek(17);
  const auto v4000 = pm.peek(4000);
  for (int i = 0; i < 100; ++i) pm.dummy_access();
  CHECK(pm.peek(17) == v17);
  CHECK(pm.peek(4000) == v4000);
  CHECK(pm.peek(17) == 99);
  CHECK(pm.peek(4000) == 100);
}

TEST_CASE("out of range ids are rejected") {
  RecursivePosMap pm({.n = 100, .leaf_count = 64, .seed = 29});
  CHECK_THROWS_AS(pm.get(100), Error);
  CHECK_THROWS_AS(pm.set(4000, 1), Error);
  CHECK_THROWS_AS(pm.peek(100), Error);
}
