#pragma once

// Complete binary tree of buckets in heap layout, bucket 0 the root. Slots
// are stored column-wise: ids, leaf tags and payload bytes live in separate
// dense arrays so sweeps touch only the column they need.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "timeclave/rng.hpp"

namespace timeclave {

inline constexpr std::uint64_t kDummyId = ~std::uint64_t{0};

struct TreeGeometry {
  // Tree height for n addressable blocks: ceil(log2 n) - 1, never negative.
  static std::uint32_t height_for(std::uint64_t n);

  static std::uint64_t bucket_count(std::uint32_t l) {
    return (std::uint64_t{2} << l) - 1;
  }
  static std::uint32_t leaf_count(std::uint32_t l) {
    return std::uint32_t{1} << l;
  }

  // Bucket on the path to leaf x at depth `level`, root being level 0.
  static std::uint64_t path_bucket(std::uint32_t x, std::uint32_t l,
                                   std::uint32_t level) {
    return ((std::uint64_t{1} << level) - 1) + (x >> (l - level));
  }
};

// Leaf-to-root bucket indices for leaf x in a tree of height l.
std::vector<std::uint64_t> path_indices(std::uint32_t x, std::uint32_t l);

class BucketTree {
 public:
  BucketTree(std::uint32_t l, std::uint32_t z, std::uint32_t b, Rng& rng);

  std::uint32_t height() const { return l_; }
  std::uint32_t z() const { return z_; }
  std::uint32_t b() const { return b_; }
  std::uint64_t bucket_count() const { return bucket_count_; }
  std::uint32_t leaf_count() const { return TreeGeometry::leaf_count(l_); }

  std::uint64_t& slot_id(std::uint64_t bucket, std::uint32_t j) {
    return ids_[bucket * z_ + j];
  }
  std::uint64_t slot_id(std::uint64_t bucket, std::uint32_t j) const {
    return ids_[bucket * z_ + j];
  }
  std::uint32_t& slot_leaf(std::uint64_t bucket, std::uint32_t j) {
    return leaves_[bucket * z_ + j];
  }
  std::uint32_t slot_leaf(std::uint64_t bucket, std::uint32_t j) const {
    return leaves_[bucket * z_ + j];
  }
  std::span<std::byte> slot_payload(std::uint64_t bucket, std::uint32_t j) {
    return {payload_.data() + (bucket * z_ + j) * b_, b_};
  }
  std::span<const std::byte> slot_payload(std::uint64_t bucket,
                                          std::uint32_t j) const {
    return {payload_.data() + (bucket * z_ + j) * b_, b_};
  }

  // Overwrites slot j with a dummy carrying fresh random filler bytes.
  void make_dummy(std::uint64_t bucket, std::uint32_t j, Rng& rng);

  void copy_bucket_from(const BucketTree& src, std::uint64_t bucket);
  bool bucket_equal(const BucketTree& other, std::uint64_t bucket) const;

  // Payload storage only; id and leaf columns are bookkeeping.
  std::uint64_t payload_bytes() const { return payload_.size(); }

 private:
  std::uint32_t l_;
  std::uint32_t z_;
  std::uint32_t b_;
  std::uint64_t bucket_count_;
  std::vector<std::uint64_t> ids_;
  std::vector<std::uint32_t> leaves_;
  std::vector<std::byte> payload_;
};

}  // namespace timeclave
