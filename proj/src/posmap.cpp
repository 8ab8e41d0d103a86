#include "timeclave/posmap.hpp"

#include <cstring>

#include "timeclave/errors.hpp"

namespace timeclave {

namespace {

constexpr std::uint32_t kLayerStashCap = 192;

std::span<std::uint32_t> as_entries(std::span<std::byte> p, std::uint32_t fan) {
  return {reinterpret_cast<std::uint32_t*>(p.data()), fan};
}

}  // namespace

RecursivePosMap::RecursivePosMap(const Config& cfg) : cfg_(cfg), rng_(cfg.seed) {
  if (cfg.n == 0 || cfg.leaf_count == 0 || cfg.fan == 0 || cfg.base_max == 0)
    fail(Errc::invalid_param, "posmap config must be positive");

  if (cfg.n <= cfg.base_max) {
    flat_.resize(cfg.n);
    for (auto& x : flat_) x = rng_.leaf(cfg.leaf_count);
    return;
  }

  std::vector<std::uint64_t> counts;
  std::uint64_t m = (cfg.n + cfg.fan - 1) / cfg.fan;
  counts.push_back(m);
  while (counts.back() > cfg.base_max)
    counts.push_back((counts.back() + cfg.fan - 1) / cfg.fan);

  const std::uint32_t block_bytes = cfg.fan * sizeof(std::uint32_t);
  for (std::uint64_t bc : counts) {
    Layer layer;
    layer.block_count = bc;
    layer.store = std::make_unique<PathStore>(
        TreeGeometry::height_for(bc), cfg.z, block_bytes,
        ScanPolicy::oblivious, kLayerStashCap, rng_);
    layers_.push_back(std::move(layer));
  }

  // Draw every tier's leaf assignment first, then materialise blocks whose
  // entries are the child tier's assignment (primary leaves at the bottom).
  std::vector<std::vector<std::uint32_t>> assign(layers_.size());
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    assign[k].resize(layers_[k].block_count);
    for (auto& x : assign[k]) x = rng_.leaf(layers_[k].store->leaf_count());
  }

  std::vector<std::uint32_t> bottom(cfg.n);
  for (auto& x : bottom) x = rng_.leaf(cfg.leaf_count);

  for (std::size_t k = 0; k < layers_.size(); ++k) {
    const auto& child = (k == 0) ? bottom : assign[k - 1];
    for (std::uint64_t g = 0; g < layers_[k].block_count; ++g) {
      layers_[k].store->positioned_access(
          g, assign[k][g], assign[k][g], /*create=*/true,
          [&](std::span<std::byte> p, oblivious::flag_t) {
            auto entries = as_entries(p, cfg_.fan);
            for (std::uint32_t j = 0; j < cfg_.fan; ++j) {
              const std::uint64_t c = g * cfg_.fan + j;
              entries[j] = c < child.size() ? child[c] : 0;
            }
          });
    }
  }
  flat_ = assign.back();
}

void RecursivePosMap::check_id(std::uint64_t id) const {
  if (id >= cfg_.n)
    fail(Errc::index_out_of_range,
         "posmap id " + std::to_string(id) + " n " + std::to_string(cfg_.n));
}

// One flat sweep pair plus one block access per layer. get, set and
// dummy_access all perform the same read-then-write sweeps at every tier.
std::uint32_t RecursivePosMap::access(std::uint64_t id, bool do_set,
                                      std::uint32_t set_val) {
  using namespace oblivious;
  check_id(id);

  if (layers_.empty()) {
    if (hook_) hook_(0, 0);
    std::span<std::uint32_t> flat{flat_};
    const std::uint32_t prev =
        o_access(AccessOp::read, flat, static_cast<std::size_t>(id));
    const std::uint32_t wval =
        static_cast<std::uint32_t>(o_select(do_set ? 1 : 0, set_val, prev));
    o_access(AccessOp::write, flat, static_cast<std::size_t>(id), wval);
    return prev;
  }

  const std::size_t t = layers_.size() - 1;
  std::vector<std::uint64_t> gid(layers_.size());
  gid[0] = id / cfg_.fan;
  for (std::size_t k = 1; k < layers_.size(); ++k) gid[k] = gid[k - 1] / cfg_.fan;

  if (hook_) hook_(0, 0);
  std::span<std::uint32_t> flat{flat_};
  const std::uint32_t fresh_top = rng_.leaf(layers_[t].store->leaf_count());
  std::uint32_t pend_cur =
      o_access(AccessOp::read, flat, static_cast<std::size_t>(gid[t]));
  o_access(AccessOp::write, flat, static_cast<std::size_t>(gid[t]), fresh_top);
  std::uint32_t pend_new = fresh_top;

  for (std::size_t k = t + 1; k-- > 0;) {
    const std::uint32_t offset = static_cast<std::uint32_t>(
        (k == 0) ? id % cfg_.fan : gid[k - 1] % cfg_.fan);
    const std::uint32_t child_new =
        (k > 0) ? rng_.leaf(layers_[k - 1].store->leaf_count()) : set_val;
    std::uint32_t prev_entry = 0;
    layers_[k].store->positioned_access(
        gid[k], pend_cur, pend_new, /*create=*/false,
        [&](std::span<std::byte> p, flag_t) {
          auto entries = as_entries(p, cfg_.fan);
          prev_entry = o_access(AccessOp::read, entries,
                                static_cast<std::size_t>(offset));
          std::uint32_t wval = prev_entry;
          o_assign((k > 0) ? 1 : (do_set ? 1 : 0), wval, child_new);
          o_access(AccessOp::write, entries, static_cast<std::size_t>(offset),
                   wval);
        });
    if (hook_) hook_(static_cast<std::uint32_t>(t - k + 1), pend_cur);
    pend_cur = prev_entry;
    pend_new = child_new;
  }
  return pend_cur;
}

std::uint32_t RecursivePosMap::get(std::uint64_t id) {
  return access(id, false, 0);
}

void RecursivePosMap::set(std::uint64_t id, std::uint32_t leaf) {
  access(id, true, leaf);
}

void RecursivePosMap::dummy_access() { access(0, false, 0); }

std::uint32_t RecursivePosMap::peek(std::uint64_t id) const {
  check_id(id);
  if (layers_.empty()) return flat_[id];

  const std::size_t t = layers_.size() - 1;
  std::vector<std::uint64_t> gid(layers_.size());
  gid[0] = id / cfg_.fan;
  for (std::size_t k = 1; k < layers_.size(); ++k) gid[k] = gid[k - 1] / cfg_.fan;

  std::uint32_t cur = flat_[gid[t]];
  std::vector<std::byte> buf(cfg_.fan * sizeof(std::uint32_t));
  for (std::size_t k = t + 1; k-- > 0;) {
    if (!layers_[k].store->peek(gid[k], cur, buf))
      fail(Errc::invalid_param, "posmap layer block missing");
    const std::uint32_t offset = static_cast<std::uint32_t>(
        (k == 0) ? id % cfg_.fan : gid[k - 1] % cfg_.fan);
    std::uint32_t v;
    std::memcpy(&v, buf.data() + offset * sizeof(std::uint32_t), sizeof(v));
    cur = v;
  }
  return cur;
}

}  // namespace timeclave
