#pragma once

// Client side of the encrypted request channel.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "timeclave/channel.hpp"
#include "timeclave/wire.hpp"

namespace timeclave {

class Client {
 public:
  Client(const std::string& addr, const ChannelKey& key);
  ~Client();

  Client(const Client&) = delete;
  Client& operator=(const Client&) = delete;

  // One encrypted request, one decrypted reply, in order.
  Message request(const Message& m);

  // Throws the server's domain error as a local Error.
  double query(Agg f, std::uint64_t t_a, std::uint64_t t_b);
  // Returns the number of points the server accepted.
  std::uint64_t ingest(std::span<const DataPoint> points);

  // Writes a raw frame body, bypassing the sealer. Test hook for tampering.
  void send_raw(std::span<const std::byte> frame_body);
  // Reads one reply frame without opening it; false on server close.
  bool read_raw(std::vector<std::byte>& frame_body);
  // Last frame body produced by request(), before tampering reuse.
  const std::vector<std::byte>& last_sent() const { return last_sent_; }

 private:
  int fd_ = -1;
  Sealer sealer_;
  Opener opener_;
  std::vector<std::byte> last_sent_;
};

}  // namespace timeclave
