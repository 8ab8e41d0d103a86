#pragma once

// Single-tree path machinery shared by the baseline ORAM and the position
// map layers: fold one path into the stash, mutate at most one block, then
// greedily write the path back. Position lookup is the caller's job; every
// stash entry carries its own leaf tag.
//
// Scan policy:
//   plain      linear scans with early exit (baseline store)
//   oblivious  fixed full-extent sweeps with masked selects

#include <algorithm>
#include <cstdint>
#include <span>
#include <vector>

#include "timeclave/oblivious.hpp"
#include "timeclave/tree.hpp"

namespace timeclave {

enum class ScanPolicy { plain, oblivious };

class Stash {
 public:
  Stash(std::uint32_t b, std::uint32_t capacity);

  std::uint32_t fill() const { return fill_; }
  std::uint32_t capacity() const { return cap_; }
  std::uint32_t b() const { return b_; }

  std::uint64_t& id(std::uint32_t i) { return ids_[i]; }
  std::uint64_t id(std::uint32_t i) const { return ids_[i]; }
  std::uint32_t& leaf(std::uint32_t i) { return leaves_[i]; }
  std::uint32_t leaf(std::uint32_t i) const { return leaves_[i]; }
  std::span<std::byte> payload(std::uint32_t i) {
    return {bytes_.data() + std::size_t{i} * b_, b_};
  }
  std::span<const std::byte> payload(std::uint32_t i) const {
    return {bytes_.data() + std::size_t{i} * b_, b_};
  }
  std::span<const std::uint64_t> ids() const { return {ids_.data(), fill_}; }

  // Appends at the public fill cursor; returns the slot index.
  std::uint32_t append(std::uint64_t id, std::uint32_t leaf,
                       std::span<const std::byte> payload);
  std::uint32_t append_zero(std::uint64_t id, std::uint32_t leaf);

  void remove_swap(std::uint32_t i);
  void clear() { fill_ = 0; }
  void swap(Stash& other);

 private:
  std::uint32_t b_;
  std::uint32_t cap_;
  std::uint32_t fill_ = 0;
  std::vector<std::uint64_t> ids_;
  std::vector<std::uint32_t> leaves_;
  std::vector<std::byte> bytes_;
};

class PathStore {
 public:
  PathStore(std::uint32_t l, std::uint32_t z, std::uint32_t b,
            ScanPolicy policy, std::uint32_t stash_capacity, Rng& rng);

  // Folds the path to cur_leaf, retags the block with new_leaf, lets rmw see
  // its payload, then writes the path back greedily. rmw runs exactly once
  // either way, as rmw(payload span, found flag); its writes persist only
  // when found. create materialises a zero-filled block when absent; under
  // the oblivious policy the caller must know the id is absent (the append
  // position is public anyway). Returns found-or-created.
  template <class Rmw>
  bool positioned_access(std::uint64_t id, std::uint32_t cur_leaf,
                         std::uint32_t new_leaf, bool create, Rmw&& rmw) {
    fold_path(cur_leaf);
    bool found;
    if (policy_ == ScanPolicy::plain) {
      found = serve_plain(id, new_leaf, create, rmw);
    } else {
      found = serve_oblivious(id, new_leaf, create, rmw);
    }
    write_path(cur_leaf);
    return found;
  }

  const BucketTree& tree() const { return tree_; }
  std::uint32_t stash_fill() const { return stash_.fill(); }
  std::uint32_t height() const { return tree_.height(); }
  std::uint32_t leaf_count() const { return tree_.leaf_count(); }

  std::uint64_t bucket_reads() const { return bucket_reads_; }
  std::uint64_t bucket_writes() const { return bucket_writes_; }

  // Non-oblivious inspection for audits: looks in the stash and on the
  // tagged path without disturbing state. Returns false if absent.
  bool peek(std::uint64_t id, std::uint32_t leaf, std::span<std::byte> out) const;

 private:
  void fold_path(std::uint32_t cur_leaf);
  void write_path(std::uint32_t cur_leaf);

  template <class Rmw>
  bool serve_plain(std::uint64_t id, std::uint32_t new_leaf, bool create,
                   Rmw&& rmw) {
    for (std::uint32_t i = 0; i < stash_.fill(); ++i) {
      if (stash_.id(i) == id) {
        stash_.leaf(i) = new_leaf;
        rmw(stash_.payload(i), oblivious::flag_t{1});
        return true;
      }
    }
    if (create) {
      const std::uint32_t i = stash_.append_zero(id, new_leaf);
      rmw(stash_.payload(i), oblivious::flag_t{1});
      return true;
    }
    std::fill(scratch_.begin(), scratch_.end(), std::byte{0});
    rmw(std::span<std::byte>(scratch_), oblivious::flag_t{0});
    return false;
  }

  template <class Rmw>
  bool serve_oblivious(std::uint64_t id, std::uint32_t new_leaf, bool create,
                       Rmw&& rmw) {
    using namespace oblivious;
    if (create) stash_.append_zero(id, new_leaf);
    flag_t found = 0;
    std::fill(scratch_.begin(), scratch_.end(), std::byte{0});
    for (std::uint32_t i = 0; i < stash_.fill(); ++i) {
      const flag_t hit = o_equal(stash_.id(i), id);
      o_assign(hit, stash_.leaf(i), new_leaf);
      o_assign_bytes(hit, scratch_.data(), stash_.payload(i).data(),
                     scratch_.size());
      found |= hit;
    }
    rmw(std::span<std::byte>(scratch_), found);
    for (std::uint32_t i = 0; i < stash_.fill(); ++i) {
      const flag_t hit = o_equal(stash_.id(i), id) & found;
      o_assign_bytes(hit, stash_.payload(i).data(), scratch_.data(),
                     scratch_.size());
    }
    return found != 0;
  }

  BucketTree tree_;
  Stash stash_;
  ScanPolicy policy_;
  Rng& rng_;
  std::vector<std::byte> scratch_;
  std::vector<std::uint8_t> placed_;
  std::uint64_t bucket_reads_ = 0;
  std::uint64_t bucket_writes_ = 0;
};

}  // namespace timeclave
