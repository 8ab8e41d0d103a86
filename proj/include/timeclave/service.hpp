#pragma once

// Network front end: accepts framed AEAD connections, decrypts requests,
// drives the engine, and answers on the same connection in request order.
// A frame that fails authentication closes the connection without a reply.

#include <atomic>
#include <cstdint>
#include <mutex>
#include <thread>
#include <vector>

#include "timeclave/channel.hpp"
#include "timeclave/config.hpp"
#include "timeclave/tsengine.hpp"
#include "timeclave/wire.hpp"

namespace timeclave {

class Service {
 public:
  // Binds and listens immediately; loads the key from cfg.key_file.
  explicit Service(const ServiceConfig& cfg);
  // Same, with key material supplied directly.
  Service(const ServiceConfig& cfg, const ChannelKey& key);
  ~Service();

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  // Resolved listen port (useful when the config asked for port 0).
  std::uint16_t port() const { return port_; }

  // Accept loop on the calling thread; returns after stop().
  void run();
  // Accept loop on a background thread.
  void start();
  // Stops accepting, unblocks handlers, joins everything.
  void stop();

  Engine& engine() { return engine_; }
  // Serialises external engine access against in-flight requests.
  std::mutex& engine_mutex() { return engine_mtx_; }

 private:
  void listen_on(const std::string& addr);
  void handle(int fd);
  Message dispatch(const Message& req);

  ServiceConfig cfg_;
  ChannelKey key_;
  Engine engine_;
  std::mutex engine_mtx_;

  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::atomic<bool> stopping_{false};
  std::thread accept_thread_;
  std::mutex conn_mtx_;
  std::vector<std::thread> handlers_;
  std::vector<int> conn_fds_;
};

}  // namespace timeclave
