#include <doctest.h>

#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

#include "timeclave/client.hpp"
#include "timeclave/config.hpp"
#include "timeclave/errors.hpp"
#include "timeclave/service.hpp"

using namespace timeclave;

TEST_CASE("config text parses and rejects junk") {
  const ServiceConfig cfg = parse_config_text(
      "# comment\n"
      "listen_addr = 0.0.0.0:9100\n"
      "retention = 1h\n"
      "intervals = 10s, 60s,300s\n"
      "variant = pathoram\n"
      "z=4\n"
      "r = 8\n"
      "mode = inline\n"
      "\n"
      "seed = 99\n");
  CHECK(cfg.listen_addr == "0.0.0.0:9100");
  CHECK(cfg.retention_ms == 3'600'000);
  CHECK(cfg.intervals_ms == std::vector<std::uint64_t>{10'000, 60'000, 300'000});
  CHECK(cfg.store == StoreKind::pathoram);
  CHECK(cfg.r == 8);
  CHECK(cfg.mode == EvictionMode::inline_batch);
  CHECK(cfg.seed == 99);

  auto code_of = [](const char* text) {
    try {
      parse_config_text(text);
    } catch (const Error& e) {
      return e.code();
    }
    return static_cast<Errc>(0xFF);
  };
  CHECK(code_of("nonsense line\n") == Errc::config_error);
  CHECK(code_of("no_such_key = 1\n") == Errc::config_error);
  CHECK(code_of("retention = 5 fortnights\n") == Errc::config_error);
  CHECK(code_of("variant = cuckoo\n") == Errc::config_error);
  CHECK(code_of("z = -1\n") == Errc::config_error);
}

TEST_CASE("durations cover the unit table") {
  CHECK(parse_duration_ms("500") == 500);
  CHECK(parse_duration_ms("500ms") == 500);
  CHECK(parse_duration_ms("10s") == 10'000);
  CHECK(parse_duration_ms("5m") == 300'000);
  CHECK(parse_duration_ms("24h") == 86'400'000);
  CHECK(parse_duration_ms("1d") == 86'400'000);
  CHECK_THROWS_AS(parse_duration_ms(""), Error);
  CHECK_THROWS_AS(parse_duration_ms("10q"), Error);
  CHECK_THROWS_AS(parse_duration_ms("s"), Error);
}

TEST_CASE("environment variables override file keys") {
  ::setenv("TIMECLAVE_RETENTION", "2h", 1);
  ::setenv("TIMECLAVE_VARIANT", "plain", 1);
  ServiceConfig cfg;
  apply_env_overrides(cfg);
  CHECK(cfg.retention_ms == 7'200'000);
  CHECK(cfg.store == StoreKind::plain);
  ::unsetenv("TIMECLAVE_RETENTION");
  ::unsetenv("TIMECLAVE_VARIANT");
}

TEST_CASE("listen addresses split into host and port") {
  const auto [h1, p1] = parse_addr("127.0.0.1:7700");
  CHECK(h1 == "127.0.0.1");
  CHECK(p1 == 7700);
  const auto [h2, p2] = parse_addr("localhost:0");
  CHECK(h2 == "localhost");
  CHECK(p2 == 0);
  CHECK_THROWS_AS(parse_addr("no-port-here"), Error);
  CHECK_THROWS_AS(parse_addr("host:70000"), Error);
  CHECK_THROWS_AS(parse_addr(":7700"), Error);
}

namespace {

double ingest_one(Client& c, std::uint64_t ts, double v) {
  const DataPoint p{ts, v};
  return c.ingest(std::span(&p, 1));
}

ServiceConfig loopback_config() {
  ServiceConfig cfg;
  cfg.listen_addr = "127.0.0.1:0";
  cfg.epoch_base = 0;
  cfg.retention_ms = 86'400'000;
  cfg.intervals_ms = {10'000, 60'000};
  cfg.store = StoreKind::roram;
  cfg.z = 4;
  cfg.r = 8;
  cfg.seed = 7;
  cfg.mode = EvictionMode::background;
  return cfg;
}

}  // namespace

TEST_CASE("ingest and query round trip through an encrypted socket") {
  const ChannelKey key = random_key();
  Service svc(loopback_config(), key);
  svc.start();
  const std::string addr = "127.0.0.1:" + std::to_string(svc.port());

  {
    Client client(addr, key);

    // 70s of data at 1s cadence closes seven 10s intervals once the next
    // point past 70'000 arrives.
    std::vector<DataPoint> pts;
    for (std::uint64_t t = 0; t <= 70'000; t += 1'000)
      pts.push_back({t, static_cast<double>(t) / 1'000.0});
    CHECK(client.ingest(pts) == static_cast<double>(pts.size()));

    // Oracle over [10'000, 70'000): values 10..69.
    double sum = 0, cnt = 0, mn = 1e300, mx = -1e300;
    for (const DataPoint& p : pts)
      if (p.ts >= 10'000 && p.ts < 70'000) {
        sum += p.value;
        cnt += 1;
        mn = std::min(mn, p.value);
        mx = std::max(mx, p.value);
      }
    CHECK(client.query(Agg::count, 10'000, 70'000) == cnt);
    CHECK(client.query(Agg::sum, 10'000, 70'000) == doctest::Approx(sum));
    CHECK(client.query(Agg::mean, 10'000, 70'000) == doctest::Approx(sum / cnt));
    CHECK(client.query(Agg::min, 10'000, 70'000) == mn);
    CHECK(client.query(Agg::max, 10'000, 70'000) == mx);

    // Domain errors come back as typed Error, connection stays usable.
    bool threw = false;
    try {
      client.query(Agg::mean, 50'000, 20'000);
    } catch (const Error& e) {
      threw = e.code() == Errc::invalid_param;
    }
    CHECK(threw);
    threw = false;
    try {
      client.query(Agg::mean, 10'001, 20'000);
    } catch (const Error& e) {
      threw = e.code() == Errc::unaligned_range;
    }
    CHECK(threw);
    CHECK(client.query(Agg::count, 10'000, 70'000) == cnt);
  }

  svc.stop();
}

TEST_CASE("a tampered frame closes the connection without a reply") {
  const ChannelKey key = random_key();
  Service svc(loopback_config(), key);
  svc.start();
  const std::string addr = "127.0.0.1:" + std::to_string(svc.port());

  {
    // Bump the nonce counter byte of the last sent frame: passes the replay
    // gate, fails the tag. The server must drop the connection with no
    // response frame of any kind.
    Client client(addr, key);
    CHECK(ingest_one(client, 1'000, 1.0) == 1.0);
    std::vector<std::byte> frame = client.last_sent();
    frame[11] = std::byte{9};
    client.send_raw(frame);
    std::vector<std::byte> buf;
    CHECK(!client.read_raw(buf));
  }
  {
    // Verbatim replay of an already-consumed frame.
    Client client(addr, key);
    CHECK(ingest_one(client, 2'000, 2.0) == 1.0);
    client.send_raw(client.last_sent());
    std::vector<std::byte> buf;
    CHECK(!client.read_raw(buf));
  }

  // A clean connection with the right key still works.
  Client again(addr, key);
  CHECK(ingest_one(again, 3'000, 3.0) == 1.0);

  svc.stop();
}

TEST_CASE("a client with the wrong key gets nothing") {
  const ChannelKey key = random_key();
  Service svc(loopback_config(), key);
  svc.start();
  const std::string addr = "127.0.0.1:" + std::to_string(svc.port());

  Client mallory(addr, random_key());
  bool failed = false;
  try {
    ingest_one(mallory, 1'000, 1.0);
  } catch (const Error&) {
    failed = true;
  }
  CHECK(failed);

  svc.stop();
}

TEST_CASE("the service survives start stop cycles and parallel clients") {
  const ChannelKey key = random_key();
  for (int round = 0; round < 2; ++round) {
    Service svc(loopback_config(), key);
    svc.start();
    const std::string addr = "127.0.0.1:" + std::to_string(svc.port());
    std::vector<std::thread> workers;
    for (int w = 0; w < 3; ++w)
      workers.emplace_back([&, w] {
        Client c(addr, key);
        std::vector<DataPoint> pts;
        for (int i = 0; i < 50; ++i)
          pts.push_back({static_cast<std::uint64_t>(100'000 + i),
                         static_cast<double>(w)});
        c.ingest(pts);
      });
    for (auto& t : workers) t.join();
    svc.stop();
  }
  CHECK(true);
}
