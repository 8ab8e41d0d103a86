#include "timeclave/wire.hpp"

#include <bit>
#include <cstring>

#include "timeclave/errors.hpp"

namespace timeclave {

namespace {

constexpr std::size_t kMaxDetail = 0xFFFF;

void put_u8(std::vector<std::byte>& out, std::uint8_t v) {
  out.push_back(static_cast<std::byte>(v));
}

void put_u64(std::vector<std::byte>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i)
    out.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xFF));
}

void put_f64(std::vector<std::byte>& out, double v) {
  put_u64(out, std::bit_cast<std::uint64_t>(v));
}

class Reader {
 public:
  explicit Reader(std::span<const std::byte> b) : b_(b) {}
  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(b_[at_++]);
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<std::uint64_t>(b_[at_ + i]) << (8 * i);
    at_ += 8;
    return v;
  }
  std::uint16_t u16() {
    need(2);
    std::uint16_t v = static_cast<std::uint16_t>(
        static_cast<std::uint16_t>(b_[at_]) |
        (static_cast<std::uint16_t>(b_[at_ + 1]) << 8));
    at_ += 2;
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(b_.data()) + at_, n);
    at_ += n;
    return s;
  }
  std::size_t left() const { return b_.size() - at_; }
  void done() const {
    if (at_ != b_.size()) fail(Errc::wire_error, "trailing bytes in message");
  }

 private:
  void need(std::size_t n) const {
    if (b_.size() - at_ < n) fail(Errc::wire_error, "message body too short");
  }
  std::span<const std::byte> b_;
  std::size_t at_ = 0;
};

}  // namespace

Message Message::make_ingest(std::vector<DataPoint> pts) {
  Message m;
  m.kind = MsgKind::ingest;
  m.points = std::move(pts);
  return m;
}

Message Message::make_query(Agg f, std::uint64_t t_a, std::uint64_t t_b) {
  Message m;
  m.kind = MsgKind::query;
  m.f = f;
  m.t_a = t_a;
  m.t_b = t_b;
  return m;
}

Message Message::make_response(double value) {
  Message m;
  m.kind = MsgKind::response;
  m.value = value;
  return m;
}

Message Message::make_error(std::uint8_t code, std::string detail) {
  Message m;
  m.kind = MsgKind::error;
  m.err_code = code;
  m.detail = std::move(detail);
  return m;
}

bool Message::operator==(const Message& o) const {
  if (kind != o.kind) return false;
  switch (kind) {
    case MsgKind::ingest:
      if (points.size() != o.points.size()) return false;
      for (std::size_t i = 0; i < points.size(); ++i)
        if (points[i].ts != o.points[i].ts ||
            std::bit_cast<std::uint64_t>(points[i].value) !=
                std::bit_cast<std::uint64_t>(o.points[i].value))
          return false;
      return true;
    case MsgKind::query:
      return f == o.f && t_a == o.t_a && t_b == o.t_b;
    case MsgKind::response:
      return status == o.status && std::bit_cast<std::uint64_t>(value) ==
                                       std::bit_cast<std::uint64_t>(o.value);
    case MsgKind::error:
      return err_code == o.err_code && detail == o.detail;
  }
  return false;
}

std::vector<std::byte> encode_message(const Message& m) {
  std::vector<std::byte> out;
  put_u8(out, static_cast<std::uint8_t>(m.kind));
  switch (m.kind) {
    case MsgKind::ingest:
      for (const DataPoint& p : m.points) {
        put_u64(out, p.ts);
        put_f64(out, p.value);
      }
      break;
    case MsgKind::query:
      put_u8(out, static_cast<std::uint8_t>(m.f));
      put_u64(out, m.t_a);
      put_u64(out, m.t_b);
      break;
    case MsgKind::response:
      put_u8(out, m.status);
      put_f64(out, m.value);
      break;
    case MsgKind::error: {
      if (m.detail.size() > kMaxDetail)
        fail(Errc::wire_error, "error detail too long");
      put_u8(out, m.err_code);
      const std::uint16_t n = static_cast<std::uint16_t>(m.detail.size());
      out.push_back(static_cast<std::byte>(n & 0xFF));
      out.push_back(static_cast<std::byte>(n >> 8));
      for (char c : m.detail) out.push_back(static_cast<std::byte>(c));
      break;
    }
    default:
      fail(Errc::wire_error, "unknown message kind");
  }
  return out;
}

Message decode_message(std::span<const std::byte> bytes) {
  Reader r(bytes);
  const std::uint8_t kind = r.u8();
  Message m;
  switch (static_cast<MsgKind>(kind)) {
    case MsgKind::ingest: {
      m.kind = MsgKind::ingest;
      if (r.left() % 16 != 0)
        fail(Errc::wire_error, "ingest body is not whole points");
      while (r.left() > 0) {
        DataPoint p;
        p.ts = r.u64();
        p.value = r.f64();
        m.points.push_back(p);
      }
      break;
    }
    case MsgKind::query: {
      m.kind = MsgKind::query;
      const std::uint8_t f = r.u8();
      if (f >= kAggCount) fail(Errc::wire_error, "unknown aggregate code");
      m.f = static_cast<Agg>(f);
      m.t_a = r.u64();
      m.t_b = r.u64();
      break;
    }
    case MsgKind::response:
      m.kind = MsgKind::response;
      m.status = r.u8();
      m.value = r.f64();
      break;
    case MsgKind::error: {
      m.kind = MsgKind::error;
      m.err_code = r.u8();
      m.detail = r.str(r.u16());
      break;
    }
    default:
      fail(Errc::wire_error,
           "unknown message kind " + std::to_string(kind));
  }
  r.done();
  return m;
}

}  // namespace timeclave
