#pragma once

#include <cstdint>
#include <random>

namespace timeclave {

// Deterministic under a fixed seed. Not used for key material; the secure
// channel draws its randomness from libsodium.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, bound). bound > 0.
  std::uint64_t below(std::uint64_t bound) {
    return std::uniform_int_distribution<std::uint64_t>(0, bound - 1)(gen_);
  }

  std::uint32_t leaf(std::uint32_t leaf_count) {
    return static_cast<std::uint32_t>(below(leaf_count));
  }

  void fill_bytes(void* dst, std::size_t n) {
    auto* p = static_cast<unsigned char*>(dst);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
      std::uint64_t v = gen_();
      __builtin_memcpy(p + i, &v, 8);
    }
    if (i < n) {
      std::uint64_t v = gen_();
      __builtin_memcpy(p + i, &v, n - i);
    }
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace timeclave
