#include "timeclave/oblivious.hpp"

namespace timeclave::oblivious {

void o_assign_bytes(flag_t cond, std::byte* dst, const std::byte* src,
                    std::size_t n) {
  const std::uint64_t m = expand_mask(cond);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    std::uint64_t d, s;
    std::memcpy(&d, dst + i, 8);
    std::memcpy(&s, src + i, 8);
    d = (s & m) | (d & ~m);
    std::memcpy(dst + i, &d, 8);
  }
  const auto mb = static_cast<unsigned char>(m & 0xFF);
  for (; i < n; ++i) {
    const auto d = static_cast<unsigned char>(dst[i]);
    const auto s = static_cast<unsigned char>(src[i]);
    dst[i] = static_cast<std::byte>((s & mb) | (d & static_cast<unsigned char>(~mb)));
  }
}

}  // namespace timeclave::oblivious
