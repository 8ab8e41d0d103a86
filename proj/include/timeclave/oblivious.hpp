#pragma once

// Branch-free building blocks. Every routine touches memory in an order that
// depends only on operand sizes, never on values or on a selected index.
// Flags are 0/1 in a uint64_t; masks are all-zeros or all-ones.

#include <bit>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <span>

#include "timeclave/errors.hpp"

namespace timeclave::oblivious {

using flag_t = std::uint64_t;

// Keeps the optimiser from turning mask arithmetic back into branches.
inline std::uint64_t value_barrier(std::uint64_t v) {
#if defined(__GNUC__)
  asm("" : "+r"(v) : /* no inputs */);
#endif
  return v;
}

inline std::uint64_t expand_mask(flag_t f) {
  return std::uint64_t{0} - value_barrier(f & 1);
}

// 1 iff v != 0, via the sign of v | -v.
inline flag_t nonzero(std::uint64_t v) {
  return (v | (std::uint64_t{0} - v)) >> 63;
}

inline flag_t o_equal(std::uint64_t x, std::uint64_t y) {
  return nonzero(x ^ y) ^ 1;
}

inline flag_t o_equal(std::int64_t x, std::int64_t y) {
  return o_equal(static_cast<std::uint64_t>(x), static_cast<std::uint64_t>(y));
}

// Borrow bit of x - y.
inline flag_t o_less(std::uint64_t x, std::uint64_t y) {
  return ((~x & y) | ((~x | y) & (x - y))) >> 63;
}

inline flag_t o_less(std::int64_t xs, std::int64_t ys) {
  const auto x = static_cast<std::uint64_t>(xs);
  const auto y = static_cast<std::uint64_t>(ys);
  const std::uint64_t sx = x >> 63;
  const std::uint64_t sy = y >> 63;
  // Same sign: the subtraction cannot wrap, its sign bit decides.
  const std::uint64_t same = (x - y) >> 63;
  return ((sx & ~sy) | (~(sx ^ sy) & same)) & 1;
}

inline flag_t o_greater(std::uint64_t x, std::uint64_t y) { return o_less(y, x); }
inline flag_t o_greater(std::int64_t x, std::int64_t y) { return o_less(y, x); }

namespace detail {

constexpr std::uint64_t kSignBit = std::uint64_t{1} << 63;

inline flag_t fp_is_nan(std::uint64_t b) {
  const std::uint64_t exp = (b >> 52) & 0x7FF;
  const std::uint64_t man = b & ((std::uint64_t{1} << 52) - 1);
  return o_equal(exp, std::uint64_t{0x7FF}) & nonzero(man);
}

// Order-preserving map from IEEE754 bits to uint64, with -0 collapsed to +0.
inline std::uint64_t fp_order_key(std::uint64_t b) {
  const flag_t is_zero = nonzero(b << 1) ^ 1;
  b &= ~(expand_mask(is_zero) & kSignBit);
  const std::uint64_t neg = expand_mask(b >> 63);
  return (b ^ neg) | (kSignBit & ~neg);
}

}  // namespace detail

// Total order on non-NaN values; any comparison involving NaN yields 0.
inline flag_t o_less(double x, double y) {
  const auto bx = std::bit_cast<std::uint64_t>(x);
  const auto by = std::bit_cast<std::uint64_t>(y);
  const flag_t ordered = (detail::fp_is_nan(bx) | detail::fp_is_nan(by)) ^ 1;
  return o_less(detail::fp_order_key(bx), detail::fp_order_key(by)) & ordered;
}

inline flag_t o_greater(double x, double y) { return o_less(y, x); }

// Bit-pattern equality: +0 != -0, identical NaN payloads compare equal.
inline flag_t o_equal(double x, double y) {
  return o_equal(std::bit_cast<std::uint64_t>(x), std::bit_cast<std::uint64_t>(y));
}

inline std::uint64_t o_select(flag_t cond, std::uint64_t if_true,
                              std::uint64_t if_false) {
  const std::uint64_t m = expand_mask(cond);
  return (if_true & m) | (if_false & ~m);
}

// dst <- src when cond, else dst keeps its value. Both operands are read and
// dst is written unconditionally.
inline void o_assign(flag_t cond, std::uint64_t& dst, std::uint64_t src) {
  dst = o_select(cond, src, dst);
}

inline void o_assign(flag_t cond, std::uint32_t& dst, std::uint32_t src) {
  dst = static_cast<std::uint32_t>(o_select(cond, src, dst));
}

inline void o_assign(flag_t cond, std::int64_t& dst, std::int64_t src) {
  dst = static_cast<std::int64_t>(o_select(
      cond, static_cast<std::uint64_t>(src), static_cast<std::uint64_t>(dst)));
}

inline void o_assign(flag_t cond, double& dst, double src) {
  dst = std::bit_cast<double>(o_select(cond, std::bit_cast<std::uint64_t>(src),
                                       std::bit_cast<std::uint64_t>(dst)));
}

void o_assign_bytes(flag_t cond, std::byte* dst, const std::byte* src,
                    std::size_t n);

inline void o_assign(flag_t cond, std::span<std::byte> dst,
                     std::span<const std::byte> src) {
  o_assign_bytes(cond, dst.data(), src.data(), dst.size());
}

enum class AccessOp { read, write };

namespace detail {

struct NullProbe {
  void operator()(std::size_t) {}
};

// Sweeps every element in index order. The target element is blended in or
// out with masks; all others are rewritten with their own value.
template <class T, class Probe = NullProbe>
T o_access_impl(AccessOp op, std::span<T> arr, std::size_t index, T in_val,
                Probe&& probe = Probe{}) {
  if (index >= arr.size())
    fail(Errc::index_out_of_range, "o_access index " + std::to_string(index) +
                                       " size " + std::to_string(arr.size()));
  T out{};
  const flag_t is_write = (op == AccessOp::write) ? 1 : 0;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    probe(i);
    const flag_t hit = o_equal(static_cast<std::uint64_t>(i),
                               static_cast<std::uint64_t>(index));
    o_assign(hit, out, arr[i]);
    o_assign(hit & is_write, arr[i], in_val);
  }
  return out;
}

template <class Probe = NullProbe>
void o_access_bytes_impl(AccessOp op, std::span<std::byte> arr,
                         std::size_t width, std::size_t index,
                         std::span<const std::byte> in_val,
                         std::span<std::byte> out, Probe&& probe = Probe{}) {
  const std::size_t n = arr.size() / width;
  if (index >= n)
    fail(Errc::index_out_of_range, "o_access index " + std::to_string(index) +
                                       " size " + std::to_string(n));
  const flag_t is_write = (op == AccessOp::write) ? 1 : 0;
  for (std::size_t i = 0; i < n; ++i) {
    probe(i);
    const flag_t hit = o_equal(static_cast<std::uint64_t>(i),
                               static_cast<std::uint64_t>(index));
    std::byte* rec = arr.data() + i * width;
    o_assign_bytes(hit, out.data(), rec, width);
    o_assign_bytes(hit & is_write, rec, in_val.data(), width);
  }
}

template <class Probe = NullProbe>
flag_t o_exists_impl(std::span<const std::uint64_t> arr, std::uint64_t x,
                     Probe&& probe = Probe{}) {
  flag_t found = 0;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    probe(i);
    found |= o_equal(arr[i], x);
  }
  return found;
}

}  // namespace detail

// Reads arr[index]; for write additionally stores in_val there. Returns the
// previous value. Index validity is checked before the sweep starts.
template <class T>
T o_access(AccessOp op, std::span<T> arr, std::size_t index, T in_val = T{}) {
  return detail::o_access_impl(op, arr, index, in_val);
}

inline flag_t o_exists(std::span<const std::uint64_t> arr, std::uint64_t x) {
  return detail::o_exists_impl(arr, x);
}

}  // namespace timeclave::oblivious
