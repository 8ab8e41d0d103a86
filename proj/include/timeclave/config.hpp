#pragma once

// key=value configuration for the service and CLI, with TIMECLAVE_ env
// overrides on top.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "timeclave/tsengine.hpp"

namespace timeclave {

struct ServiceConfig {
  std::string listen_addr = "127.0.0.1:7700";
  std::string key_file = "timeclave.key";
  std::uint64_t epoch_base = 0;
  std::uint64_t retention_ms = 86'400'000;
  std::vector<std::uint64_t> intervals_ms = {10'000, 60'000};
  StoreKind store = StoreKind::roram;
  std::uint32_t z = 4;
  std::uint32_t b = 40;  // raw-ORAM block bytes, bench only; engine blocks are fixed
  std::uint32_t r = 16;
  std::uint64_t seed = 1;
  EvictionMode mode = EvictionMode::background;

  EngineConfig engine() const {
    return {epoch_base, retention_ms, intervals_ms, store, z, r, seed, mode};
  }
};

// "500" (ms), "10s", "90m", "24h", "7d".
std::uint64_t parse_duration_ms(const std::string& s);

// One key=value per line; '#' comments; unknown keys rejected.
ServiceConfig parse_config_text(const std::string& text);
ServiceConfig load_config(const std::string& path);

// TIMECLAVE_LISTEN_ADDR, TIMECLAVE_RETENTION, TIMECLAVE_INTERVALS, ...
void apply_env_overrides(ServiceConfig& cfg);

// "host:port" with a numeric port.
std::pair<std::string, std::uint16_t> parse_addr(const std::string& addr);

}  // namespace timeclave
