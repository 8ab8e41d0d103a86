#include "timeclave/service.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstring>

#include "timeclave/errors.hpp"

namespace timeclave {

Service::Service(const ServiceConfig& cfg)
    : Service(cfg, load_key(cfg.key_file)) {}

Service::Service(const ServiceConfig& cfg, const ChannelKey& key)
    : cfg_(cfg), key_(key), engine_(cfg.engine()) {
  listen_on(cfg_.listen_addr);
}

Service::~Service() { stop(); }

void Service::listen_on(const std::string& addr) {
  const auto [host, port] = parse_addr(addr);
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) fail(Errc::io_error, "socket failed");
  const int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);

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
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&sa), sizeof sa) != 0)
    fail(Errc::io_error,
         "cannot bind " + addr + ": " + std::strerror(errno));
  if (::listen(listen_fd_, 64) != 0)
    fail(Errc::io_error, "listen failed: " + std::string(std::strerror(errno)));

  sockaddr_in bound{};
  socklen_t len = sizeof bound;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&bound), &len);
  port_ = ntohs(bound.sin_port);
}

void Service::run() {
  for (;;) {
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (errno == EINTR) continue;
      break;  // listener closed by stop()
    }
    if (stopping_.load()) {
      ::close(fd);
      break;
    }
    std::lock_guard<std::mutex> g(conn_mtx_);
    conn_fds_.push_back(fd);
    handlers_.emplace_back([this, fd] { handle(fd); });
  }
}

void Service::start() {
  accept_thread_ = std::thread([this] { run(); });
}

void Service::stop() {
  if (stopping_.exchange(true)) return;
  if (listen_fd_ >= 0) {
    ::shutdown(listen_fd_, SHUT_RDWR);
    ::close(listen_fd_);
    listen_fd_ = -1;
  }
  if (accept_thread_.joinable()) accept_thread_.join();
  std::vector<std::thread> handlers;
  {
    std::lock_guard<std::mutex> g(conn_mtx_);
    // In-flight requests finish; the next read on each connection sees EOF.
    for (int fd : conn_fds_) ::shutdown(fd, SHUT_RD);
    handlers.swap(handlers_);
  }
  for (std::thread& t : handlers)
    if (t.joinable()) t.join();
}

Message Service::dispatch(const Message& req) {
  std::lock_guard<std::mutex> g(engine_mtx_);
  switch (req.kind) {
    case MsgKind::ingest: {
      for (const DataPoint& p : req.points) engine_.ingest(p);
      return Message::make_response(static_cast<double>(req.points.size()));
    }
    case MsgKind::query:
      return Message::make_response(engine_.execute(req.f, req.t_a, req.t_b));
    default:
      fail(Errc::wire_error, "unexpected message kind");
  }
}

void Service::handle(int fd) {
  Opener opener(key_, kClientToServer);
  Sealer sealer(key_, kServerToClient);
  std::vector<std::byte> body;
  for (;;) {
    try {
      if (!read_frame(fd, body)) break;  // clean close
    } catch (const Error&) {
      break;  // torn frame or socket error
    }
    std::vector<std::byte> plain;
    try {
      plain = opener.open(body);
    } catch (const Error&) {
      break;  // tampered or replayed: close without a reply
    }
    Message reply;
    try {
      reply = dispatch(decode_message(plain));
    } catch (const Error& e) {
      // what() is "Name: detail"; the wire carries the bare detail.
      std::string detail = e.what();
      const std::string prefix = std::string(errc_name(e.code())) + ": ";
      if (detail.rfind(prefix, 0) == 0) detail = detail.substr(prefix.size());
      reply = Message::make_error(static_cast<std::uint8_t>(e.code()),
                                  std::move(detail));
    }
    try {
      write_frame(fd, sealer.seal(encode_message(reply)));
    } catch (const Error&) {
      break;  // peer went away mid-reply
    }
  }
  {
    // Drop the fd from the shutdown list before the number can be reused.
    std::lock_guard<std::mutex> g(conn_mtx_);
    std::erase(conn_fds_, fd);
  }
  ::close(fd);
}

}  // namespace timeclave
