#include "timeclave/pathstore.hpp"

#include <cstring>

#include "timeclave/errors.hpp"

namespace timeclave {

Stash::Stash(std::uint32_t b, std::uint32_t capacity)
    : b_(b),
      cap_(capacity),
      ids_(capacity, kDummyId),
      leaves_(capacity, 0),
      bytes_(std::size_t{capacity} * b) {}

std::uint32_t Stash::append(std::uint64_t id, std::uint32_t leaf,
                            std::span<const std::byte> payload) {
  if (fill_ == cap_)
    fail(Errc::stash_overflow, "stash full at " + std::to_string(cap_));
  ids_[fill_] = id;
  leaves_[fill_] = leaf;
  std::memcpy(bytes_.data() + std::size_t{fill_} * b_, payload.data(), b_);
  return fill_++;
}

std::uint32_t Stash::append_zero(std::uint64_t id, std::uint32_t leaf) {
  if (fill_ == cap_)
    fail(Errc::stash_overflow, "stash full at " + std::to_string(cap_));
  ids_[fill_] = id;
  leaves_[fill_] = leaf;
  std::memset(bytes_.data() + std::size_t{fill_} * b_, 0, b_);
  return fill_++;
}

void Stash::remove_swap(std::uint32_t i) {
  const std::uint32_t last = fill_ - 1;
  ids_[i] = ids_[last];
  leaves_[i] = leaves_[last];
  std::memcpy(bytes_.data() + std::size_t{i} * b_,
              bytes_.data() + std::size_t{last} * b_, b_);
  ids_[last] = kDummyId;
  fill_ = last;
}

void Stash::swap(Stash& other) {
  std::swap(b_, other.b_);
  std::swap(cap_, other.cap_);
  std::swap(fill_, other.fill_);
  ids_.swap(other.ids_);
  leaves_.swap(other.leaves_);
  bytes_.swap(other.bytes_);
}

PathStore::PathStore(std::uint32_t l, std::uint32_t z, std::uint32_t b,
                     ScanPolicy policy, std::uint32_t stash_capacity, Rng& rng)
    : tree_(l, z, b, rng),
      stash_(b, stash_capacity),
      policy_(policy),
      rng_(rng),
      scratch_(b) {}

void PathStore::fold_path(std::uint32_t cur_leaf) {
  const std::uint32_t l = tree_.height();
  for (std::uint32_t level = 0; level <= l; ++level) {
    const std::uint64_t bkt = TreeGeometry::path_bucket(cur_leaf, l, level);
    ++bucket_reads_;
    for (std::uint32_t j = 0; j < tree_.z(); ++j) {
      if (tree_.slot_id(bkt, j) != kDummyId)
        stash_.append(tree_.slot_id(bkt, j), tree_.slot_leaf(bkt, j),
                      tree_.slot_payload(bkt, j));
    }
  }
}

// Greedy write-back, deepest level first. Every bucket on the path is
// rewritten: selected entries move from the stash, the rest becomes fresh
// random dummies.
void PathStore::write_path(std::uint32_t cur_leaf) {
  using namespace oblivious;
  const std::uint32_t l = tree_.height();
  placed_.assign(stash_.fill(), 0);

  for (std::uint32_t level = l + 1; level-- > 0;) {
    const std::uint64_t bkt = TreeGeometry::path_bucket(cur_leaf, l, level);
    const std::uint32_t shift = l - level;
    const std::uint64_t prefix = cur_leaf >> shift;
    ++bucket_writes_;

    if (policy_ == ScanPolicy::plain) {
      std::uint32_t placed_count = 0;
      for (std::uint32_t i = 0;
           i < stash_.fill() && placed_count < tree_.z(); ++i) {
        if (placed_[i]) continue;
        if ((stash_.leaf(i) >> shift) != prefix) continue;
        const std::uint32_t j = placed_count++;
        tree_.slot_id(bkt, j) = stash_.id(i);
        tree_.slot_leaf(bkt, j) = stash_.leaf(i);
        std::memcpy(tree_.slot_payload(bkt, j).data(), stash_.payload(i).data(),
                    tree_.b());
        placed_[i] = 1;
      }
      for (std::uint32_t j = placed_count; j < tree_.z(); ++j)
        tree_.make_dummy(bkt, j, rng_);
    } else {
      for (std::uint32_t j = 0; j < tree_.z(); ++j) {
        std::uint64_t chosen = ~std::uint64_t{0};
        flag_t any = 0;
        for (std::uint32_t i = 0; i < stash_.fill(); ++i) {
          const flag_t route =
              o_equal(std::uint64_t{stash_.leaf(i)} >> shift, prefix);
          const flag_t take = route & (placed_[i] ^ 1) & (any ^ 1);
          o_assign(take, chosen, std::uint64_t{i});
          any |= take;
        }
        if (any) {
          std::uint64_t sid = kDummyId;
          std::uint32_t sleaf = 0;
          std::fill(scratch_.begin(), scratch_.end(), std::byte{0});
          for (std::uint32_t i = 0; i < stash_.fill(); ++i) {
            const flag_t hit = o_equal(std::uint64_t{i}, chosen);
            o_assign(hit, sid, stash_.id(i));
            o_assign(hit, sleaf, stash_.leaf(i));
            o_assign_bytes(hit, scratch_.data(), stash_.payload(i).data(),
                           scratch_.size());
            placed_[i] = static_cast<std::uint8_t>(placed_[i] | hit);
          }
          tree_.slot_id(bkt, j) = sid;
          tree_.slot_leaf(bkt, j) = sleaf;
          std::memcpy(tree_.slot_payload(bkt, j).data(), scratch_.data(),
                      tree_.b());
        } else {
          tree_.make_dummy(bkt, j, rng_);
        }
      }
    }
  }

  for (std::uint32_t i = stash_.fill(); i-- > 0;) {
    if (placed_[i]) {
      placed_[i] = placed_[stash_.fill() - 1];
      stash_.remove_swap(i);
    }
  }
}

bool PathStore::peek(std::uint64_t id, std::uint32_t leaf,
                     std::span<std::byte> out) const {
  for (std::uint32_t i = 0; i < stash_.fill(); ++i) {
    if (stash_.id(i) == id) {
      std::memcpy(out.data(), stash_.payload(i).data(), tree_.b());
      return true;
    }
  }
  const std::uint32_t l = tree_.height();
  for (std::uint32_t level = 0; level <= l; ++level) {
    const std::uint64_t bkt = TreeGeometry::path_bucket(leaf, l, level);
    for (std::uint32_t j = 0; j < tree_.z(); ++j) {
      if (tree_.slot_id(bkt, j) == id) {
        std::memcpy(out.data(), tree_.slot_payload(bkt, j).data(), tree_.b());
        return true;
      }
    }
  }
  return false;
}

}  // namespace timeclave
