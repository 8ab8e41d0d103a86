#include "timeclave/pathoram.hpp"

#include <cstring>

#include "timeclave/errors.hpp"

namespace timeclave {

PathOram::PathOram(const Config& cfg)
    : cfg_(cfg),
      rng_(cfg.seed),
      store_(TreeGeometry::height_for(cfg.n), cfg.z, cfg.b, ScanPolicy::plain,
             cfg.stash_capacity, rng_),
      posmap_(cfg.n) {
  for (auto& x : posmap_) x = rng_.leaf(store_.leaf_count());
}

std::uint32_t PathOram::check_id(std::uint64_t id) const {
  if (id >= cfg_.n)
    fail(Errc::index_out_of_range,
         "id " + std::to_string(id) + " n " + std::to_string(cfg_.n));
  return posmap_[id];
}

bool PathOram::read(std::uint64_t id, std::span<std::byte> out) {
  const std::uint32_t cur = check_id(id);
  const std::uint32_t next = rng_.leaf(store_.leaf_count());
  posmap_[id] = next;
  return store_.positioned_access(
      id, cur, next, /*create=*/false,
      [&](std::span<std::byte> payload, oblivious::flag_t found) {
        if (found) std::memcpy(out.data(), payload.data(), cfg_.b);
      });
}

void PathOram::write(std::uint64_t id, std::span<const std::byte> in) {
  const std::uint32_t cur = check_id(id);
  const std::uint32_t next = rng_.leaf(store_.leaf_count());
  posmap_[id] = next;
  store_.positioned_access(
      id, cur, next, /*create=*/true,
      [&](std::span<std::byte> payload, oblivious::flag_t) {
        std::memcpy(payload.data(), in.data(), cfg_.b);
      });
}

}  // namespace timeclave
