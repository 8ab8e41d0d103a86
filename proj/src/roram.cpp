#include "timeclave/roram.hpp"

#include <bit>
#include <cassert>
#include <cstring>
#include <map>

#include "timeclave/errors.hpp"

namespace timeclave {

using namespace oblivious;

namespace {

std::uint32_t stash_capacity(const RoOramConfig& cfg, std::uint32_t l) {
  return cfg.stash_headroom * (l + 1) * cfg.z * cfg.r;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt) {
  return hash_arg(seed ^ (salt * 0x9E3779B97F4A7C15ull));
}

std::uint32_t bucket_level(std::uint64_t bucket) {
  return static_cast<std::uint32_t>(std::bit_width(bucket + 1) - 1);
}

}  // namespace

RoOram::RoOram(const RoOramConfig& cfg, TraceSink* sink)
    : cfg_(cfg),
      l_(TreeGeometry::height_for(cfg.n)),
      leaves_(TreeGeometry::leaf_count(l_)),
      rng_(derive_seed(cfg.seed, 1)),
      worker_rng_(derive_seed(cfg.seed, 3)),
      tr_r_(l_, cfg.z, cfg.b, rng_),
      tr_w_(tr_r_),
      s_(cfg.b, stash_capacity(cfg, l_)),
      s_tmp_(cfg.b, stash_capacity(cfg, l_)),
      p_l_(cfg.r, 0),
      dirty_id_(cfg.r, kDummyId),
      dirty_leaf_(cfg.r, 0),
      ebuckets_(std::size_t{cfg.r} * (l_ + 1), kDummyId),
      // Twin maps must start identical, so both draw from the same seed.
      pos_({.n = cfg.n,
            .leaf_count = leaves_,
            .fan = cfg.posmap_fan,
            .base_max = cfg.posmap_base,
            .z = cfg.z,
            .seed = derive_seed(cfg.seed, 2)}),
      pos_tmp_({.n = cfg.n,
                .leaf_count = leaves_,
                .fan = cfg.posmap_fan,
                .base_max = cfg.posmap_base,
                .z = cfg.z,
                .seed = derive_seed(cfg.seed, 2)}),
      sink_(sink),
      fake_scratch_(std::size_t{cfg.z} * cfg.b) {
  if (cfg.r == 0 || cfg.r > leaves_)
    fail(Errc::invalid_param, "r " + std::to_string(cfg.r) +
                                  " must be in [1, " + std::to_string(leaves_) +
                                  "]");
  if (cfg.stash_headroom == 0)
    fail(Errc::invalid_param, "stash headroom must be positive");

  if (sink_) sink_->bind(cfg_.n, cfg_.z, cfg_.r, l_);

  pos_.set_walk_hook([this](std::uint32_t d, std::uint32_t leaf) {
    emit(TraceEventKind::posmap_walk, (std::uint64_t{d} << 32) | leaf);
  });
  pos_tmp_.set_walk_hook([this](std::uint32_t d, std::uint32_t leaf) {
    emit(TraceEventKind::posmap_walk, (std::uint64_t{d} << 32) | leaf);
  });

  if (cfg_.mode == EvictionMode::background)
    worker_ = std::thread([this] { worker_loop(); });
}

RoOram::~RoOram() {
  if (worker_.joinable()) {
    {
      std::lock_guard<std::mutex> j(job_mtx_);
      stop_ = true;
    }
    job_cv_.notify_all();
    worker_.join();
  }
}

// Reads and writes share this prologue: resolve the current leaf, assign a
// fresh one in pos_tmp, record the dirty entry, then decide whether the real
// path may be read. The dummy candidate is drawn either way so the op's
// randomness consumption does not depend on the outcome.
std::uint32_t RoOram::pick_leaf(std::uint64_t id, flag_t* use_dummy) {
  const std::uint32_t x = pos_.get(id);
  const std::uint32_t fresh = rng_.leaf(leaves_);
  pos_tmp_.set(id, fresh);
  dirty_id_[dirty_fill_] = id;
  dirty_leaf_[dirty_fill_] = fresh;
  ++dirty_fill_;

  flag_t in_stash = o_exists(s_.ids(), id) | o_exists(s_tmp_.ids(), id);
  emit(TraceEventKind::stash_sweep, s_.fill() + s_tmp_.fill());

  flag_t collide = 0;
  for (std::uint32_t k = 0; k < p_l_fill_; ++k)
    collide |= o_equal(std::uint64_t{x}, std::uint64_t{p_l_[k]});
  *use_dummy = in_stash | collide;

  if (cfg_.debug_checks && collide && !in_stash)
    assert(written_.count(id) == 0 && "collision without a stash copy");

  // Rejection sampling over the public P_L contents.
  std::uint32_t dummy;
  for (;;) {
    dummy = rng_.leaf(leaves_);
    flag_t taken = 0;
    for (std::uint32_t k = 0; k < p_l_fill_; ++k)
      taken |= o_equal(std::uint64_t{dummy}, std::uint64_t{p_l_[k]});
    if (!taken) break;
  }
  return static_cast<std::uint32_t>(
      o_select(*use_dummy, std::uint64_t{dummy}, std::uint64_t{x}));
}

// Copies every real slot of the path into S. A slot whose id already lives
// in the stash pair enters as dummy ballast so no block is ever duplicated;
// the ballast dies at the next eviction.
void RoOram::fold_path(std::uint32_t leaf) {
  for (std::uint32_t level = 0; level <= l_; ++level) {
    const std::uint64_t bkt = TreeGeometry::path_bucket(leaf, l_, level);
    ++fold_buckets_;
    for (std::uint32_t j = 0; j < cfg_.z; ++j) {
      const std::uint64_t id = tr_r_.slot_id(bkt, j);
      if (id == kDummyId) continue;
      const flag_t dup = o_exists(s_.ids(), id) | o_exists(s_tmp_.ids(), id);
      s_.append(o_select(dup, kDummyId, id), tr_r_.slot_leaf(bkt, j),
                tr_r_.slot_payload(bkt, j));
    }
  }
}

void RoOram::op_read(std::uint64_t id, std::span<std::byte> out, bool* found) {
  begin(TraceOpKind::read, id);
  flag_t use_dummy;
  const std::uint32_t leaf = pick_leaf(id, &use_dummy);
  const std::uint32_t fresh = dirty_leaf_[dirty_fill_ - 1];

  emit((cfg_.debug_labels && use_dummy) ? TraceEventKind::dummy_path_read
                                        : TraceEventKind::path_read,
       leaf);
  fold_path(leaf);
  p_l_[p_l_fill_++] = leaf;

  std::memset(out.data(), 0, out.size());
  flag_t hit_any = 0;
  for (std::uint32_t i = 0; i < s_.fill(); ++i) {
    const flag_t hit = o_equal(s_.id(i), id);
    o_assign_bytes(hit, out.data(), s_.payload(i).data(), out.size());
    o_assign(hit, s_.leaf(i), fresh);
    hit_any |= hit;
  }
  emit(TraceEventKind::stash_sweep, s_.fill());

  ++reads_;
  *found = hit_any != 0;
}

void RoOram::op_write(std::uint64_t id, std::span<const std::byte> in) {
  begin(TraceOpKind::write, id);
  flag_t use_dummy;
  const std::uint32_t leaf = pick_leaf(id, &use_dummy);
  const std::uint32_t fresh = dirty_leaf_[dirty_fill_ - 1];

  emit((cfg_.debug_labels && use_dummy) ? TraceEventKind::dummy_path_read
                                        : TraceEventKind::path_read,
       leaf);
  fold_path(leaf);
  p_l_[p_l_fill_++] = leaf;

  // Retire any previous copy in place, then append the fresh payload.
  for (std::uint32_t i = 0; i < s_.fill(); ++i) {
    const flag_t hit = o_equal(s_.id(i), id);
    o_assign(hit, s_.id(i), kDummyId);
  }
  s_.append(id, fresh, in);
  emit(TraceEventKind::stash_sweep, s_.fill());

  ++writes_;
  if (cfg_.debug_checks) written_.insert(id);
}

void RoOram::ensure_headroom() {
  const std::uint32_t need = (l_ + 1) * cfg_.z + 1;
  if (s_.fill() + need <= s_.capacity()) return;
  if (p_l_fill_ == 0)
    fail(Errc::capacity_exceeded,
         "stash cannot hold one more fold; raise stash_headroom");
  evict_batch(take_batch());
  if (s_.fill() + need > s_.capacity())
    fail(Errc::capacity_exceeded,
         "stash still full after eviction; raise stash_headroom");
}

bool RoOram::read(std::uint64_t id, std::span<std::byte> out) {
  if (id >= cfg_.n)
    fail(Errc::index_out_of_range,
         "id " + std::to_string(id) + " n " + std::to_string(cfg_.n));
  if (out.size() != cfg_.b) fail(Errc::invalid_param, "payload size mismatch");

  bool found = false;
  if (cfg_.mode == EvictionMode::inline_batch) {
    ensure_headroom();
    op_read(id, out, &found);
    if (p_l_fill_ >= cfg_.r)
      evict_batch(take_batch());
    return found;
  }

  for (;;) {
    bool done = false, want_evict = false, force = false, wait_tmp = false;
    {
      std::shared_lock<std::shared_mutex> g(gate_);
      std::lock_guard<std::mutex> m(op_mtx_);
      if (admit(id, &wait_tmp, &want_evict, &force)) {
        op_read(id, out, &found);
        done = true;
        want_evict = p_l_fill_ >= cfg_.r;
      }
    }
    if (wait_tmp) {
      drain();
      continue;
    }
    if (want_evict) request_evict(force);
    if (done) return found;
  }
}

// Gate for one background op, called with the gate and op mutex held.
// Refuses when the block is riding the in-flight eviction, when the batch
// already holds r paths, or when the stash cannot absorb one more fold plus
// the worst-case merge of every in-flight survivor.
bool RoOram::admit(std::uint64_t id, bool* wait_tmp, bool* want_evict,
                   bool* force) {
  if (o_exists(s_tmp_.ids(), id)) {
    *wait_tmp = true;
    return false;
  }
  if (p_l_fill_ >= cfg_.r) {
    *want_evict = *force = true;
    return false;
  }
  const std::uint32_t need = (l_ + 1) * cfg_.z + 1;
  if (s_.fill() + need + s_tmp_.fill() > s_.capacity()) {
    if (s_tmp_.fill() > 0) {
      *wait_tmp = true;  // the pending merge frees the reservation
    } else if (p_l_fill_ == 0) {
      fail(Errc::capacity_exceeded,
           "stash cannot hold one more fold; raise stash_headroom");
    } else {
      *want_evict = *force = true;
    }
    return false;
  }
  return true;
}

void RoOram::write(std::uint64_t id, std::span<const std::byte> in) {
  if (id >= cfg_.n)
    fail(Errc::index_out_of_range,
         "id " + std::to_string(id) + " n " + std::to_string(cfg_.n));
  if (in.size() != cfg_.b) fail(Errc::invalid_param, "payload size mismatch");

  if (cfg_.mode == EvictionMode::inline_batch) {
    ensure_headroom();
    op_write(id, in);
    if (p_l_fill_ >= cfg_.r)
      evict_batch(take_batch());
    return;
  }

  for (;;) {
    bool done = false, want_evict = false, force = false, wait_tmp = false;
    {
      std::shared_lock<std::shared_mutex> g(gate_);
      std::lock_guard<std::mutex> m(op_mtx_);
      if (admit(id, &wait_tmp, &want_evict, &force)) {
        op_write(id, in);
        done = true;
        want_evict = p_l_fill_ >= cfg_.r;
      }
    }
    if (wait_tmp) {
      drain();
      continue;
    }
    if (want_evict) request_evict(force);
    if (done) return;
  }
}

RoOram::Batch RoOram::take_batch() {
  assert(s_tmp_.fill() == 0 && "eviction already in flight");
  Batch b;
  b.p_l.assign(p_l_.begin(), p_l_.begin() + p_l_fill_);
  b.dirty_id.assign(dirty_id_.begin(), dirty_id_.begin() + dirty_fill_);
  b.dirty_leaf.assign(dirty_leaf_.begin(), dirty_leaf_.begin() + dirty_fill_);
  s_.swap(s_tmp_);
  p_l_fill_ = 0;
  dirty_fill_ = 0;
  return b;
}

// Phase one: write each batch path once against Tr_W, deepest bucket first,
// greedily filling from S_tmp. A bucket already written this batch only
// receives a fake touch. Runs without the gate in background mode; it never
// mutates S_tmp content, only the placed flags and Tr_W.
void RoOram::place_paths(const Batch& batch) {
  std::fill(ebuckets_.begin(), ebuckets_.end(), kDummyId);
  ebuckets_fill_ = 0;
  placed_.assign(s_tmp_.fill(), 0);

  Rng& rng = (cfg_.mode == EvictionMode::background) ? worker_rng_ : rng_;
  const std::span<const std::uint64_t> candidates{ebuckets_.data(),
                                                  ebuckets_.size()};

  for (std::uint32_t k = 0; k < batch.p_l.size(); ++k) {
    const std::uint32_t p = batch.p_l[k];
    for (std::uint32_t level = l_ + 1; level-- > 0;) {
      const std::uint64_t bkt = TreeGeometry::path_bucket(p, l_, level);
      if (o_exists(candidates, bkt)) {
        // Fake access: read the bucket, use nothing.
        for (std::uint32_t j = 0; j < cfg_.z; ++j)
          std::memcpy(fake_scratch_.data() + std::size_t{j} * cfg_.b,
                      tr_w_.slot_payload(bkt, j).data(), cfg_.b);
        ++fake_touches_;
        emit(cfg_.debug_labels ? TraceEventKind::fake_bucket_access
                               : TraceEventKind::bucket_write,
             bkt);
      } else {
        ebuckets_[ebuckets_fill_++] = bkt;
        const std::uint32_t shift = l_ - level;
        const std::uint32_t prefix = p >> shift;
        std::uint32_t filled = 0;
        for (std::uint32_t i = 0;
             i < s_tmp_.fill() && filled < cfg_.z; ++i) {
          if (placed_[i] || s_tmp_.id(i) == kDummyId) continue;
          if ((s_tmp_.leaf(i) >> shift) != prefix) continue;
          tr_w_.slot_id(bkt, filled) = s_tmp_.id(i);
          tr_w_.slot_leaf(bkt, filled) = s_tmp_.leaf(i);
          std::memcpy(tr_w_.slot_payload(bkt, filled).data(),
                      s_tmp_.payload(i).data(), cfg_.b);
          placed_[i] = 1;
          ++filled;
        }
        for (std::uint32_t j = filled; j < cfg_.z; ++j)
          tr_w_.make_dummy(bkt, j, rng);
        ++evict_bucket_writes_;
        emit(TraceEventKind::bucket_write, bkt);
      }
    }
  }
}

// The live batch treats a folded path as fully captured: its eviction will
// rewrite those buckets, and the dummy rule counts on the stash holding any
// block whose position sits on an already-read path. A background sync that
// lands blocks into such a bucket after the fold would break both, so every
// real block in a synced bucket lying on an already-folded path is pulled
// into S instead of reaching the trees. Bucket indices and the read paths
// are public, so the membership test needs no masking. The live batch is
// empty during an inline eviction, so this never fires there.
void RoOram::hoist_folded(std::uint64_t bkt) {
  if (p_l_fill_ == 0) return;
  const std::uint32_t level = bucket_level(bkt);
  bool crossed = false;
  for (std::uint32_t k = 0; k < p_l_fill_; ++k)
    crossed |= (TreeGeometry::path_bucket(p_l_[k], l_, level) == bkt);
  if (!crossed) return;
  for (std::uint32_t j = 0; j < cfg_.z; ++j) {
    const std::uint64_t id = tr_w_.slot_id(bkt, j);
    if (id == kDummyId) continue;
    s_.append(id, tr_w_.slot_leaf(bkt, j), tr_w_.slot_payload(bkt, j));
    tr_w_.make_dummy(bkt, j, worker_rng_);
  }
}

// Phase two: copy the written buckets into Tr_R (padded to the batch extent
// so the event count is a function of the batch size alone), replay the
// dirty list into pos, and merge the unplaced S_tmp survivors back into S.
void RoOram::sync_batch(const Batch& batch) {
  const std::size_t extent = batch.p_l.size() * (l_ + 1);
  for (std::uint32_t k = 0; k < ebuckets_fill_; ++k) {
    hoist_folded(ebuckets_[k]);
    tr_r_.copy_bucket_from(tr_w_, ebuckets_[k]);
    emit(TraceEventKind::sync_copy, ebuckets_[k]);
  }
  for (std::size_t k = ebuckets_fill_; k < extent; ++k) {
    tr_r_.copy_bucket_from(tr_w_, 0);  // idempotent: root is always synced
    emit(TraceEventKind::sync_copy, 0);
  }

  for (std::size_t k = 0; k < batch.dirty_id.size(); ++k)
    pos_.set(batch.dirty_id[k], batch.dirty_leaf[k]);
  for (std::size_t k = batch.dirty_id.size(); k < batch.p_l.size(); ++k)
    pos_.dummy_access();

  for (std::uint32_t i = 0; i < s_tmp_.fill(); ++i) {
    if (placed_[i] || s_tmp_.id(i) == kDummyId) continue;
    s_.append(s_tmp_.id(i), s_tmp_.leaf(i), s_tmp_.payload(i));
  }
  s_tmp_.clear();
  ++evictions_;
  emit(TraceEventKind::sync_copy, kSyncMarker);
}

void RoOram::evict_batch(Batch&& batch) {
  begin(TraceOpKind::evict, evictions_);
  place_paths(batch);
  sync_batch(batch);
}

void RoOram::request_evict(bool force) {
  for (;;) {
    {
      std::unique_lock<std::mutex> j(job_mtx_);
      idle_cv_.wait(j, [&] { return !worker_busy_ && !job_; });
    }
    std::unique_lock<std::shared_mutex> g(gate_);
    std::lock_guard<std::mutex> m(op_mtx_);
    const bool ready = p_l_fill_ >= cfg_.r || force;
    if (!ready || p_l_fill_ == 0) return;
    {
      std::lock_guard<std::mutex> j(job_mtx_);
      if (worker_busy_ || job_) continue;  // raced with another trigger
      job_ = std::make_unique<Batch>(take_batch());
    }
    job_cv_.notify_one();
    return;
  }
}

void RoOram::worker_loop() {
  for (;;) {
    std::unique_ptr<Batch> batch;
    {
      std::unique_lock<std::mutex> j(job_mtx_);
      job_cv_.wait(j, [&] { return stop_ || job_; });
      if (stop_) return;
      batch = std::move(job_);
      worker_busy_ = true;
    }
    begin(TraceOpKind::evict, evictions_);
    place_paths(*batch);
    {
      std::unique_lock<std::shared_mutex> g(gate_);
      std::lock_guard<std::mutex> m(op_mtx_);
      sync_batch(*batch);
    }
    {
      std::lock_guard<std::mutex> j(job_mtx_);
      worker_busy_ = false;
    }
    idle_cv_.notify_all();
  }
}

void RoOram::drain() {
  if (cfg_.mode != EvictionMode::background) return;
  std::unique_lock<std::mutex> j(job_mtx_);
  idle_cv_.wait(j, [&] { return !worker_busy_ && !job_; });
}

void RoOram::evict_now() {
  if (cfg_.mode == EvictionMode::inline_batch) {
    evict_batch(take_batch());
    return;
  }
  request_evict(/*force=*/true);
  drain();
}

void RoOram::audit() const {
  if (s_tmp_.fill() != 0) fail(Errc::invalid_param, "audit during eviction");
  if (p_l_fill_ != 0) fail(Errc::invalid_param, "audit mid-batch");

  for (std::uint64_t b = 0; b < tr_r_.bucket_count(); ++b)
    if (!tr_r_.bucket_equal(tr_w_, b))
      fail(Errc::invalid_param, "trees diverge at bucket " + std::to_string(b));

  std::map<std::uint64_t, int> count;
  for (std::uint64_t b = 0; b < tr_r_.bucket_count(); ++b) {
    const std::uint32_t level = bucket_level(b);
    for (std::uint32_t j = 0; j < cfg_.z; ++j) {
      const std::uint64_t id = tr_r_.slot_id(b, j);
      if (id == kDummyId) continue;
      if (id >= cfg_.n) fail(Errc::invalid_param, "foreign id in tree");
      const std::uint32_t leaf = tr_r_.slot_leaf(b, j);
      if (TreeGeometry::path_bucket(leaf, l_, level) != b)
        fail(Errc::invalid_param,
             "block " + std::to_string(id) + " off its path");
      if (pos_.peek(id) != leaf)
        fail(Errc::invalid_param,
             "block " + std::to_string(id) + " tag disagrees with pos");
      ++count[id];
    }
  }
  for (std::uint32_t i = 0; i < s_.fill(); ++i) {
    const std::uint64_t id = s_.id(i);
    if (id == kDummyId) continue;
    if (pos_.peek(id) != s_.leaf(i))
      fail(Errc::invalid_param,
           "stash block " + std::to_string(id) + " tag disagrees with pos");
    ++count[id];
  }
  for (const auto& [id, c] : count)
    if (c != 1)
      fail(Errc::invalid_param,
           "block " + std::to_string(id) + " present " + std::to_string(c) +
               " times");
  for (std::uint64_t id = 0; id < cfg_.n; ++id) {
    if (pos_.peek(id) != pos_tmp_.peek(id))
      fail(Errc::invalid_param,
           "pos maps disagree at id " + std::to_string(id));
    if (cfg_.debug_checks) {
      const bool present = count.count(id) != 0;
      if (present != (written_.count(id) != 0))
        fail(Errc::invalid_param,
             "presence mismatch for id " + std::to_string(id));
    }
  }
}

}  // namespace timeclave
