#include "timeclave/client.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstring>

#include "timeclave/config.hpp"
#include "timeclave/errors.hpp"

namespace timeclave {

Client::Client(const std::string& addr, const ChannelKey& key)
    : sealer_(key, kClientToServer), opener_(key, kServerToClient) {
  const auto [host, port] = parse_addr(addr);
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0) fail(Errc::io_error, "socket failed");

  sockaddr_in sa{};
  sa.sin_family = AF_INET;
  sa.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &sa.sin_addr) != 1) {
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    if (::getaddrinfo(host.c_str(), nullptr, &hints, &res) != 0 || !res)
      fail(Errc::config_error, "cannot resolve " + host);
    sa.sin_addr = reinterpret_cast<sockaddr_in*>(res->ai_addr)->sin_addr;
    ::freeaddrinfo(res);
  }
  if (::connect(fd_, reinterpret_cast<sockaddr*>(&sa), sizeof sa) != 0) {
    const int err = errno;
    ::close(fd_);
    fd_ = -1;
    fail(Errc::io_error, "cannot connect to " + addr + ": " +
                             std::strerror(err));
  }
}

Client::~Client() {
  if (fd_ >= 0) ::close(fd_);
}

Message Client::request(const Message& m) {
  last_sent_ = sealer_.seal(encode_message(m));
  write_frame(fd_, last_sent_);
  std::vector<std::byte> body;
  if (!read_frame(fd_, body))
    fail(Errc::io_error, "server closed the connection");
  return decode_message(opener_.open(body));
}

double Client::query(Agg f, std::uint64_t t_a, std::uint64_t t_b) {
  const Message reply = request(Message::make_query(f, t_a, t_b));
  if (reply.kind == MsgKind::error)
    throw Error(static_cast<Errc>(reply.err_code), reply.detail);
  if (reply.kind != MsgKind::response)
    fail(Errc::wire_error, "unexpected reply kind");
  return reply.value;
}

std::uint64_t Client::ingest(std::span<const DataPoint> points) {
  const Message reply = request(Message::make_ingest(
      std::vector<DataPoint>(points.begin(), points.end())));
  if (reply.kind == MsgKind::error)
    throw Error(static_cast<Errc>(reply.err_code), reply.detail);
  if (reply.kind != MsgKind::response)
    fail(Errc::wire_error, "unexpected reply kind");
  return static_cast<std::uint64_t>(reply.value);
}

void Client::send_raw(std::span<const std::byte> frame_body) {
  write_frame(fd_, frame_body);
}

bool Client::read_raw(std::vector<std::byte>& frame_body) {
  try {
    return read_frame(fd_, frame_body);
  } catch (const Error&) {
    return false;  // torn read counts as closed for the tamper tests
  }
}

}  // namespace timeclave
