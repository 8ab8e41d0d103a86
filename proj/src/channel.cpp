#include "timeclave/channel.hpp"

#include <sodium.h>
#include <sys/socket.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cerrno>
#include <cstdio>
#include <cstring>
#include <mutex>

#include "timeclave/errors.hpp"

namespace timeclave {

namespace {

constexpr std::uint64_t kCounterMax = (std::uint64_t{1} << 40) - 1;
constexpr std::uint32_t kMaxFrame = 1u << 24;

void ensure_sodium() {
  static std::once_flag once;
  std::call_once(once, [] {
    if (sodium_init() < 0) fail(Errc::config_error, "sodium_init failed");
  });
}

void fill_nonce(unsigned char* nonce, const unsigned char* prefix,
                std::uint8_t dir, std::uint64_t counter) {
  std::memcpy(nonce, prefix, 6);
  nonce[6] = dir;
  for (int i = 0; i < 5; ++i)
    nonce[7 + i] = static_cast<unsigned char>(counter >> (8 * (4 - i)));
}

std::uint64_t nonce_counter(const unsigned char* nonce) {
  std::uint64_t c = 0;
  for (int i = 0; i < 5; ++i) c = (c << 8) | nonce[7 + i];
  return c;
}

}  // namespace

ChannelKey::~ChannelKey() { sodium_memzero(bytes.data(), bytes.size()); }

ChannelKey random_key() {
  ensure_sodium();
  ChannelKey k;
  randombytes_buf(k.bytes.data(), k.bytes.size());
  return k;
}

ChannelKey load_key(const std::string& path) {
  ensure_sodium();
  FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) fail(Errc::io_error, "cannot open key file " + path);
  ChannelKey k;
  const std::size_t got = std::fread(k.bytes.data(), 1, k.bytes.size(), f);
  const bool extra = std::fgetc(f) != EOF;
  std::fclose(f);
  if (got != k.bytes.size() || extra)
    fail(Errc::io_error, "key file " + path + " must hold exactly " +
                             std::to_string(kKeyBytes) + " bytes");
  return k;
}

void save_key(const ChannelKey& key, const std::string& path) {
  FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) fail(Errc::io_error, "cannot write key file " + path);
  const std::size_t put = std::fwrite(key.bytes.data(), 1, key.bytes.size(), f);
  std::fclose(f);
  if (put != key.bytes.size())
    fail(Errc::io_error, "short write to key file " + path);
  ::chmod(path.c_str(), 0600);
}

Sealer::Sealer(const ChannelKey& key, std::uint8_t direction)
    : key_(key.bytes), dir_(direction) {
  ensure_sodium();
  randombytes_buf(prefix_.data(), prefix_.size());
}

Sealer::~Sealer() { sodium_memzero(key_.data(), key_.size()); }

std::vector<std::byte> Sealer::seal(std::span<const std::byte> plain) {
  if (counter_ > kCounterMax) fail(Errc::wire_error, "session counter spent");
  std::vector<std::byte> out(kNonceBytes + plain.size() + kTagBytes);
  unsigned char* nonce = reinterpret_cast<unsigned char*>(out.data());
  fill_nonce(nonce, prefix_.data(), dir_, counter_++);
  unsigned long long ct_len = 0;
  crypto_aead_chacha20poly1305_ietf_encrypt(
      reinterpret_cast<unsigned char*>(out.data()) + kNonceBytes, &ct_len,
      reinterpret_cast<const unsigned char*>(plain.data()), plain.size(),
      nullptr, 0, nullptr, nonce, key_.data());
  out.resize(kNonceBytes + ct_len);
  return out;
}

Opener::Opener(const ChannelKey& key, std::uint8_t expect_direction)
    : key_(key.bytes), dir_(expect_direction) {
  ensure_sodium();
}

Opener::~Opener() { sodium_memzero(key_.data(), key_.size()); }

std::vector<std::byte> Opener::open(std::span<const std::byte> frame) {
  if (frame.size() < kNonceBytes + kTagBytes)
    fail(Errc::auth_failure, "frame too short");
  const unsigned char* nonce =
      reinterpret_cast<const unsigned char*>(frame.data());
  if (nonce[6] != dir_)
    fail(Errc::auth_failure, "frame from the wrong direction");
  const std::uint64_t counter = nonce_counter(nonce);
  if (seen_any_ && counter <= last_counter_)
    fail(Errc::auth_failure, "replayed or reordered frame");

  const std::size_t ct_len = frame.size() - kNonceBytes;
  std::vector<std::byte> plain(ct_len - kTagBytes);
  unsigned long long plain_len = 0;
  const int rc = crypto_aead_chacha20poly1305_ietf_decrypt(
      reinterpret_cast<unsigned char*>(plain.data()), &plain_len, nullptr,
      reinterpret_cast<const unsigned char*>(frame.data()) + kNonceBytes,
      ct_len, nullptr, 0, nonce, key_.data());
  if (rc != 0) fail(Errc::auth_failure, "frame failed authentication");
  plain.resize(plain_len);
  seen_any_ = true;
  last_counter_ = counter;
  return plain;
}

void write_frame(int fd, std::span<const std::byte> body) {
  if (body.size() > kMaxFrame) fail(Errc::wire_error, "frame too large");
  unsigned char len[4];
  const std::uint32_t n = static_cast<std::uint32_t>(body.size());
  for (int i = 0; i < 4; ++i)
    len[i] = static_cast<unsigned char>((n >> (8 * i)) & 0xFF);
  const std::byte* parts[2] = {reinterpret_cast<const std::byte*>(len),
                               body.data()};
  const std::size_t sizes[2] = {4, body.size()};
  for (int part = 0; part < 2; ++part) {
    const std::byte* p = parts[part];
    std::size_t left = sizes[part];
    while (left > 0) {
      const ssize_t put = ::send(fd, p, left, MSG_NOSIGNAL);
      if (put < 0) {
        if (errno == EINTR) continue;
        fail(Errc::io_error,
             std::string("send failed: ") + std::strerror(errno));
      }
      p += put;
      left -= static_cast<std::size_t>(put);
    }
  }
}

namespace {

// Returns false only on EOF with nothing read yet and allow_eof set.
bool read_exact(int fd, void* buf, std::size_t n, bool allow_eof) {
  unsigned char* p = static_cast<unsigned char*>(buf);
  std::size_t got = 0;
  while (got < n) {
    const ssize_t r = ::recv(fd, p + got, n - got, 0);
    if (r < 0) {
      if (errno == EINTR) continue;
      fail(Errc::io_error, std::string("recv failed: ") + std::strerror(errno));
    }
    if (r == 0) {
      if (got == 0 && allow_eof) return false;
      fail(Errc::io_error, "connection closed mid-frame");
    }
    got += static_cast<std::size_t>(r);
  }
  return true;
}

}  // namespace

bool read_frame(int fd, std::vector<std::byte>& body) {
  unsigned char len[4];
  if (!read_exact(fd, len, 4, true)) return false;
  std::uint32_t n = 0;
  for (int i = 0; i < 4; ++i) n |= static_cast<std::uint32_t>(len[i]) << (8 * i);
  if (n == 0 || n > kMaxFrame) fail(Errc::wire_error, "bad frame length");
  body.resize(n);
  read_exact(fd, body.data(), n, false);
  return true;
}

}  // namespace timeclave
