#include "timeclave/tree.hpp"

#include <bit>
#include <cstring>

#include "timeclave/errors.hpp"

namespace timeclave {

std::uint32_t TreeGeometry::height_for(std::uint64_t n) {
  if (n == 0) fail(Errc::invalid_param, "capacity must be positive");
  const auto ceil_log2 =
      static_cast<std::uint32_t>(std::bit_width(n - 1));  // bit_width(0) == 0
  return ceil_log2 > 1 ? ceil_log2 - 1 : 0;
}

std::vector<std::uint64_t> path_indices(std::uint32_t x, std::uint32_t l) {
  if (x >= TreeGeometry::leaf_count(l))
    fail(Errc::index_out_of_range, "leaf " + std::to_string(x) +
                                       " height " + std::to_string(l));
  std::vector<std::uint64_t> out(l + 1);
  std::uint64_t b = ((std::uint64_t{1} << l) - 1) + x;
  for (std::uint32_t i = 0; i <= l; ++i) {
    out[i] = b;
    b = (b - 1) / 2;
  }
  return out;
}

BucketTree::BucketTree(std::uint32_t l, std::uint32_t z, std::uint32_t b,
                       Rng& rng)
    : l_(l),
      z_(z),
      b_(b),
      bucket_count_(TreeGeometry::bucket_count(l)),
      ids_(bucket_count_ * z, kDummyId),
      leaves_(bucket_count_ * z, 0),
      payload_(bucket_count_ * z * b) {
  if (z == 0 || b == 0) fail(Errc::invalid_param, "z and b must be positive");
  rng.fill_bytes(payload_.data(), payload_.size());
}

void BucketTree::make_dummy(std::uint64_t bucket, std::uint32_t j, Rng& rng) {
  slot_id(bucket, j) = kDummyId;
  slot_leaf(bucket, j) = 0;
  auto p = slot_payload(bucket, j);
  rng.fill_bytes(p.data(), p.size());
}

void BucketTree::copy_bucket_from(const BucketTree& src, std::uint64_t bucket) {
  const std::uint64_t base = bucket * z_;
  std::memcpy(ids_.data() + base, src.ids_.data() + base, z_ * sizeof(std::uint64_t));
  std::memcpy(leaves_.data() + base, src.leaves_.data() + base,
              z_ * sizeof(std::uint32_t));
  std::memcpy(payload_.data() + base * b_, src.payload_.data() + base * b_,
              static_cast<std::size_t>(z_) * b_);
}

bool BucketTree::bucket_equal(const BucketTree& other,
                              std::uint64_t bucket) const {
  const std::uint64_t base = bucket * z_;
  return std::memcmp(ids_.data() + base, other.ids_.data() + base,
                     z_ * sizeof(std::uint64_t)) == 0 &&
         std::memcmp(leaves_.data() + base, other.leaves_.data() + base,
                     z_ * sizeof(std::uint32_t)) == 0 &&
         std::memcmp(payload_.data() + base * b_,
                     other.payload_.data() + base * b_,
                     static_cast<std::size_t>(z_) * b_) == 0;
}

}  // namespace timeclave
