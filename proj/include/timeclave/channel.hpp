#pragma once

// Authenticated framing over the request channel. Every frame body is
// nonce(12) || ciphertext+tag; the nonce is a 6-byte random session prefix,
// one direction byte, and a 5-byte big-endian frame counter, so nonces never
// repeat per key and direction and reflected or replayed frames fail closed.

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace timeclave {

inline constexpr std::size_t kKeyBytes = 32;
inline constexpr std::size_t kNonceBytes = 12;
inline constexpr std::size_t kTagBytes = 16;

inline constexpr std::uint8_t kClientToServer = 0;
inline constexpr std::uint8_t kServerToClient = 1;

// Key material wipes itself on destruction and is never logged.
struct ChannelKey {
  std::array<unsigned char, kKeyBytes> bytes{};
  ~ChannelKey();
  ChannelKey() = default;
  ChannelKey(const ChannelKey&) = default;
  ChannelKey& operator=(const ChannelKey&) = default;
};

ChannelKey random_key();
ChannelKey load_key(const std::string& path);
// Writes the raw key with owner-only permissions.
void save_key(const ChannelKey& key, const std::string& path);

// One sending direction of a session.
class Sealer {
 public:
  Sealer(const ChannelKey& key, std::uint8_t direction);
  ~Sealer();
  std::vector<std::byte> seal(std::span<const std::byte> plain);

 private:
  std::array<unsigned char, kKeyBytes> key_;
  std::array<unsigned char, 6> prefix_;
  std::uint8_t dir_;
  std::uint64_t counter_ = 0;
};

// One receiving direction. Rejects wrong-direction nonces and any counter
// that does not strictly increase.
class Opener {
 public:
  Opener(const ChannelKey& key, std::uint8_t expect_direction);
  ~Opener();
  // frame is nonce || ciphertext+tag. Throws AuthFailure on any mismatch.
  std::vector<std::byte> open(std::span<const std::byte> frame);

 private:
  std::array<unsigned char, kKeyBytes> key_;
  std::uint8_t dir_;
  bool seen_any_ = false;
  std::uint64_t last_counter_ = 0;
};

// Length-prefixed frame IO over a stream socket. read_frame returns false on
// a clean peer close before any byte of a frame.
void write_frame(int fd, std::span<const std::byte> body);
bool read_frame(int fd, std::vector<std::byte>& body);

}  // namespace timeclave
