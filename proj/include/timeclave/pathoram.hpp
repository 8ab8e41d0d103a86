#pragma once

// Baseline single-tree ORAM: flat position map, per-access greedy eviction,
// plain linear scans. Serves as the reference store the batched variant is
// measured against.

#include <cstdint>
#include <span>
#include <vector>

#include "timeclave/pathstore.hpp"

namespace timeclave {

class PathOram {
 public:
  struct Config {
    std::uint64_t n = 0;
    std::uint32_t z = 4;
    std::uint32_t b = 0;
    std::uint64_t seed = 1;
    std::uint32_t stash_capacity = 256;
  };

  explicit PathOram(const Config& cfg);

  // Returns whether the block existed. Reads leave absent blocks absent;
  // writes materialise them.
  bool read(std::uint64_t id, std::span<std::byte> out);
  void write(std::uint64_t id, std::span<const std::byte> in);

  std::uint32_t height() const { return store_.height(); }
  std::uint32_t leaf_count() const { return store_.leaf_count(); }
  std::uint32_t stash_fill() const { return store_.stash_fill(); }
  std::uint64_t bucket_count() const { return store_.tree().bucket_count(); }
  std::uint64_t memory_bytes() const { return store_.tree().payload_bytes(); }
  std::uint64_t bucket_reads() const { return store_.bucket_reads(); }
  std::uint64_t bucket_writes() const { return store_.bucket_writes(); }
  std::uint32_t posmap_leaf(std::uint64_t id) const { return posmap_[id]; }
  const BucketTree& tree() const { return store_.tree(); }

 private:
  std::uint32_t check_id(std::uint64_t id) const;

  Config cfg_;
  Rng rng_;
  PathStore store_;
  std::vector<std::uint32_t> posmap_;
};

}  // namespace timeclave
