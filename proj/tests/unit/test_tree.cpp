#include <doctest.h>

#include "timeclave/errors.hpp"
#include "timeclave/tree.hpp"

using namespace timeclave;

TEST_CASE("tree height and bucket counts") {
  CHECK(TreeGeometry::height_for(1) == 0);
  CHECK(TreeGeometry::height_for(2) == 0);
  CHECK(TreeGeometry::height_for(3) == 1);
  CHECK(TreeGeometry::height_for(4) == 1);
  CHECK(TreeGeometry::height_for(1 << 14) == 13);
  CHECK(TreeGeometry::height_for(8640) == 13);
  CHECK(TreeGeometry::bucket_count(0) == 1);
  CHECK(TreeGeometry::bucket_count(13) == 16383);
  CHECK(TreeGeometry::leaf_count(13) == 8192);
}

TEST_CASE("path indices run leaf to root") {
  CHECK(path_indices(0, 1) == std::vector<std::uint64_t>{1, 0});
  CHECK(path_indices(1, 1) == std::vector<std::uint64_t>{2, 0});
  CHECK(path_indices(5, 3) == std::vector<std::uint64_t>{12, 5, 2, 0});
  CHECK(path_indices(0, 0) == std::vector<std::uint64_t>{0});
  CHECK_THROWS_AS(path_indices(2, 1), Error);
}

TEST_CASE("path_bucket matches the parent chain for every leaf") {
  for (std::uint32_t l : {0u, 1u, 3u, 6u}) {
    for (std::uint32_t x = 0; x < TreeGeometry::leaf_count(l); ++x) {
      const auto chain = path_indices(x, l);
      for (std::uint32_t level = 0; level <= l; ++level)
        CHECK(TreeGeometry::path_bucket(x, l, level) == chain[l - level]);
    }
  }
}

TEST_CASE("buckets start as dummies with random filler") {
  Rng rng(3);
  BucketTree t(3, 4, 16, rng);
  CHECK(t.bucket_count() == 15);
  CHECK(t.leaf_count() == 8);
  for (std::uint64_t b = 0; b < t.bucket_count(); ++b)
    for (std::uint32_t j = 0; j < t.z(); ++j)
      CHECK(t.slot_id(b, j) == kDummyId);
  CHECK(t.payload_bytes() == 15 * 4 * 16);

  // Dummy rewrite regenerates filler bytes.
  std::vector<std::byte> before(t.slot_payload(2, 1).begin(),
                                t.slot_payload(2, 1).end());
  t.make_dummy(2, 1, rng);
  std::vector<std::byte> after(t.slot_payload(2, 1).begin(),
                               t.slot_payload(2, 1).end());
  CHECK(before != after);
}

TEST_CASE("bucket copy and compare") {
  Rng rng(4);
  BucketTree a(2, 2, 8, rng), b(2, 2, 8, rng);
  CHECK_FALSE(a.bucket_equal(b, 3));
  b.copy_bucket_from(a, 3);
  CHECK(a.bucket_equal(b, 3));
  CHECK_FALSE(a.bucket_equal(b, 2));
}
