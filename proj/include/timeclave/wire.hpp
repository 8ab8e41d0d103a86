#pragma once

// Plaintext message layer of the request channel. Encoding is little-endian
// and length-exact; anything else is a WireError.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "timeclave/summary.hpp"

namespace timeclave {

enum class MsgKind : std::uint8_t {
  ingest = 1,
  query = 2,
  response = 3,
  error = 4,
};

struct Message {
  MsgKind kind = MsgKind::ingest;

  std::vector<DataPoint> points;  // ingest: repeated {ts u64, value f64}

  Agg f = Agg::count;             // query: {f u8, t_a u64, t_b u64}
  std::uint64_t t_a = 0;
  std::uint64_t t_b = 0;

  std::uint8_t status = 0;        // response: {status u8, value f64}
  double value = 0;

  std::uint8_t err_code = 0;      // error: {code u8, detail u16-prefixed utf8}
  std::string detail;

  static Message make_ingest(std::vector<DataPoint> pts);
  static Message make_query(Agg f, std::uint64_t t_a, std::uint64_t t_b);
  static Message make_response(double value);
  static Message make_error(std::uint8_t code, std::string detail);

  bool operator==(const Message& o) const;
};

std::vector<std::byte> encode_message(const Message& m);
// Throws WireError on unknown kind, short/overlong body, or oversized detail.
Message decode_message(std::span<const std::byte> bytes);

}  // namespace timeclave
