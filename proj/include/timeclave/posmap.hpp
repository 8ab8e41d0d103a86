#pragma once

// Position map translating block id to its current leaf in a primary tree.
// Maps of up to base_max entries are a flat array swept with o_access. Above
// that, entries pack fan-per-block into oblivious path stores whose own
// positions recurse until the top tier fits the flat base. Every access
// walks flat tier then each layer exactly once, so the pattern reveals only
// the recursion depth, never the id.

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "timeclave/pathstore.hpp"

namespace timeclave {

class RecursivePosMap {
 public:
  struct Config {
    std::uint64_t n = 0;         // ids covered
    std::uint32_t leaf_count = 0;  // primary tree leaf domain
    std::uint32_t fan = 64;
    std::uint32_t base_max = 256;
    std::uint32_t z = 4;
    std::uint64_t seed = 1;
  };

  // hook(depth, leaf): flat tier is depth 0, deeper layers follow.
  using WalkHook = std::function<void(std::uint32_t, std::uint32_t)>;

  explicit RecursivePosMap(const Config& cfg);

  std::uint32_t get(std::uint64_t id);
  void set(std::uint64_t id, std::uint32_t leaf);

  // Walks every tier exactly like set, changing nothing. Used as padding.
  void dummy_access();

  // Test and audit helper: current value without any state change.
  std::uint32_t peek(std::uint64_t id) const;

  void set_walk_hook(WalkHook h) { hook_ = std::move(h); }
  std::uint32_t depth() const { return static_cast<std::uint32_t>(layers_.size()); }

 private:
  struct Layer {
    std::uint64_t block_count;
    std::unique_ptr<PathStore> store;
  };

  std::uint32_t access(std::uint64_t id, bool do_set, std::uint32_t set_val);
  void check_id(std::uint64_t id) const;

  Config cfg_;
  Rng rng_;
  std::vector<std::uint32_t> flat_;
  // layers_[0] holds primary leaves; layers_[k] holds layer k-1 tree leaves.
  // flat_ holds the top layer's tree leaves (or primary leaves if no layers).
  std::vector<Layer> layers_;
  WalkHook hook_;
};

}  // namespace timeclave
