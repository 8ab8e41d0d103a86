#pragma once

// Batched-eviction ORAM over twin trees.
//
// Notation:
//   N  addressable blocks, B payload bytes, Z slots per bucket
//   L  tree height: 2^(L+1)-1 buckets, 2^L leaves
//   R  batch size: reads per eviction, R <= 2^L
//   Tr_R read tree, Tr_W write tree; equal outside eviction
//   S   live stash, S_tmp stash under eviction, S_L = id column of S
//   P_L leaves whose paths were read since the last eviction
//
// Reads fold one path of Tr_R into S without writing anything back. When
// the requested block already sits in S, or its mapped path is already in
// P_L, a dummy path is read instead, drawn uniformly from the leaves not in
// P_L; all paths within a batch stay pairwise distinct. A fold never
// duplicates a block: slots whose id is already in S_L enter as dummies.
// Writes fold the block's mapped path under the same rule, retire the old
// copy in place and append the fresh payload at the stash cursor. Every op
// assigns a fresh uniform leaf in pos_tmp and records it on the dirty list.
//
// Eviction runs when the R-th read lands, when P_L fills, or early when the
// stash needs headroom. Phase one swaps S into S_tmp and walks the batch
// paths deepest bucket first against Tr_W: each bucket is written exactly
// once, greedily filled from S_tmp; a bucket met again only gets a fake
// touch. Phase two copies the written buckets into Tr_R, replays the dirty
// list into pos and merges the S_tmp leftovers back into S.
//
// Trace discipline: per-op event kinds and counts depend only on the op
// kind and the public batch fill, never on ids. Dummy path reads are
// labelled path_read and fake touches bucket_write unless debug_labels is
// set; sync events are padded to the written-bucket extent of the batch.

#include <condition_variable>
#include <cstdint>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <span>
#include <thread>
#include <unordered_set>
#include <vector>

#include "timeclave/pathstore.hpp"
#include "timeclave/posmap.hpp"
#include "timeclave/trace.hpp"

namespace timeclave {

enum class EvictionMode {
  inline_batch,  // eviction runs on the calling thread at batch end
  background,    // eviction phase one runs on a worker thread
};

struct RoOramConfig {
  std::uint64_t n = 0;
  std::uint32_t z = 4;
  std::uint32_t b = 0;
  std::uint32_t r = 1;
  std::uint64_t seed = 1;
  EvictionMode mode = EvictionMode::inline_batch;
  std::uint32_t stash_headroom = 2;  // c in capacity c*(L+1)*Z*R
  std::uint32_t posmap_fan = 64;
  std::uint32_t posmap_base = 256;
  bool debug_checks = false;  // track written ids for audits
  bool debug_labels = false;  // distinct kinds for dummy reads/fake touches
};

class RoOram {
 public:
  explicit RoOram(const RoOramConfig& cfg, TraceSink* sink = nullptr);
  ~RoOram();

  RoOram(const RoOram&) = delete;
  RoOram& operator=(const RoOram&) = delete;

  // Returns whether the block has ever been written.
  bool read(std::uint64_t id, std::span<std::byte> out);
  void write(std::uint64_t id, std::span<const std::byte> in);

  // Forces a batch eviction now (draining the worker in background mode).
  void evict_now();
  // Waits until no eviction is pending or running.
  void drain();

  std::uint32_t height() const { return l_; }
  std::uint32_t leaf_count() const { return leaves_; }
  std::uint64_t memory_bytes() const {
    return tr_r_.payload_bytes() + tr_w_.payload_bytes();
  }
  const RoOramConfig& config() const { return cfg_; }

  std::uint64_t reads() const { return reads_; }
  std::uint64_t writes() const { return writes_; }
  std::uint64_t evictions() const { return evictions_; }
  std::uint64_t fold_buckets() const { return fold_buckets_; }
  std::uint64_t evict_bucket_writes() const { return evict_bucket_writes_; }
  std::uint64_t fake_touches() const { return fake_touches_; }
  std::uint32_t stash_fill() const { return s_.fill(); }
  std::uint32_t batch_fill() const { return p_l_fill_; }

  // Debug accessors for audits and tests.
  std::uint32_t pos_peek(std::uint64_t id) const { return pos_.peek(id); }
  std::uint32_t pos_tmp_peek(std::uint64_t id) const { return pos_tmp_.peek(id); }
  const BucketTree& read_tree() const { return tr_r_; }
  const BucketTree& write_tree() const { return tr_w_; }
  const Stash& stash() const { return s_; }

  // Full structural audit; throws on any violation. Callers in background
  // mode should drain() first.
  void audit() const;

 private:
  struct Batch {
    std::vector<std::uint32_t> p_l;
    std::vector<std::uint64_t> dirty_id;
    std::vector<std::uint32_t> dirty_leaf;
  };

  void op_read(std::uint64_t id, std::span<std::byte> out, bool* found);
  void op_write(std::uint64_t id, std::span<const std::byte> in);
  void ensure_headroom();
  bool admit(std::uint64_t id, bool* wait_tmp, bool* want_evict, bool* force);
  std::uint32_t pick_leaf(std::uint64_t id, oblivious::flag_t* use_dummy);
  void fold_path(std::uint32_t leaf);

  void evict_batch(Batch&& batch);
  void place_paths(const Batch& batch);
  void hoist_folded(std::uint64_t bkt);
  void sync_batch(const Batch& batch);
  Batch take_batch();

  void worker_loop();
  void request_evict(bool force);
  void emit(TraceEventKind kind, std::uint64_t index) {
    if (!sink_) return;
    if (cfg_.mode == EvictionMode::background) {
      std::lock_guard<std::mutex> t(trace_mtx_);
      sink_->event(kind, index);
    } else {
      sink_->event(kind, index);
    }
  }
  void begin(TraceOpKind kind, std::uint64_t arg) {
    if (!sink_) return;
    if (cfg_.mode == EvictionMode::background) {
      std::lock_guard<std::mutex> t(trace_mtx_);
      sink_->op_begin(kind, hash_arg(arg));
    } else {
      sink_->op_begin(kind, hash_arg(arg));
    }
  }

  RoOramConfig cfg_;
  std::uint32_t l_;
  std::uint32_t leaves_;
  Rng rng_;
  Rng worker_rng_{0};
  BucketTree tr_r_;
  BucketTree tr_w_;
  Stash s_;
  Stash s_tmp_;
  std::vector<std::uint32_t> p_l_;
  std::uint32_t p_l_fill_ = 0;
  std::vector<std::uint64_t> dirty_id_;
  std::vector<std::uint32_t> dirty_leaf_;
  std::uint32_t dirty_fill_ = 0;
  std::vector<std::uint64_t> ebuckets_;
  std::uint32_t ebuckets_fill_ = 0;
  std::vector<std::uint8_t> placed_;
  RecursivePosMap pos_;
  RecursivePosMap pos_tmp_;
  TraceSink* sink_;

  std::uint64_t reads_ = 0;
  std::uint64_t writes_ = 0;
  std::uint64_t evictions_ = 0;
  std::uint64_t fold_buckets_ = 0;
  std::uint64_t evict_bucket_writes_ = 0;
  std::uint64_t fake_touches_ = 0;

  std::unordered_set<std::uint64_t> written_;  // debug_checks only

  // Background mode. Lock order: gate_ before op_mtx_.
  mutable std::shared_mutex gate_;
  std::mutex op_mtx_;
  std::mutex trace_mtx_;
  std::mutex job_mtx_;
  std::condition_variable job_cv_;
  std::condition_variable idle_cv_;
  std::unique_ptr<Batch> job_;
  bool worker_busy_ = false;
  bool stop_ = false;
  std::thread worker_;

  std::vector<std::byte> fake_scratch_;
};

}  // namespace timeclave
