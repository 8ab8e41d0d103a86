#include "timeclave/config.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "timeclave/errors.hpp"

namespace timeclave {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::uint64_t parse_u64(const std::string& s, const char* what) {
  if (s.empty()) fail(Errc::config_error, std::string(what) + " is empty");
  std::uint64_t v = 0;
  for (char c : s) {
    if (!std::isdigit(static_cast<unsigned char>(c)))
      fail(Errc::config_error,
           std::string(what) + " '" + s + "' is not a number");
    v = v * 10 + static_cast<std::uint64_t>(c - '0');
  }
  return v;
}

std::vector<std::uint64_t> parse_intervals(const std::string& s) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(parse_duration_ms(item));
  }
  if (out.empty()) fail(Errc::config_error, "intervals list is empty");
  return out;
}

void apply(ServiceConfig& cfg, const std::string& key,
           const std::string& value) {
  if (key == "listen_addr") {
    cfg.listen_addr = value;
  } else if (key == "key_file") {
    cfg.key_file = value;
  } else if (key == "epoch_base") {
    cfg.epoch_base = parse_duration_ms(value);
  } else if (key == "retention") {
    cfg.retention_ms = parse_duration_ms(value);
  } else if (key == "intervals") {
    cfg.intervals_ms = parse_intervals(value);
  } else if (key == "variant") {
    if (!store_kind_from_name(value.c_str(), &cfg.store))
      fail(Errc::config_error, "unknown variant '" + value + "'");
  } else if (key == "z") {
    cfg.z = static_cast<std::uint32_t>(parse_u64(value, "z"));
  } else if (key == "b") {
    cfg.b = static_cast<std::uint32_t>(parse_u64(value, "b"));
  } else if (key == "r") {
    cfg.r = static_cast<std::uint32_t>(parse_u64(value, "r"));
  } else if (key == "seed") {
    cfg.seed = parse_u64(value, "seed");
  } else if (key == "mode") {
    if (value == "inline") {
      cfg.mode = EvictionMode::inline_batch;
    } else if (value == "background") {
      cfg.mode = EvictionMode::background;
    } else {
      fail(Errc::config_error, "mode must be inline or background");
    }
  } else {
    fail(Errc::config_error, "unknown config key '" + key + "'");
  }
}

}  // namespace

std::uint64_t parse_duration_ms(const std::string& raw) {
  const std::string s = trim(raw);
  if (s.empty()) fail(Errc::config_error, "empty duration");
  std::size_t digits = 0;
  while (digits < s.size() &&
         std::isdigit(static_cast<unsigned char>(s[digits])))
    ++digits;
  if (digits == 0)
    fail(Errc::config_error, "duration '" + s + "' has no number");
  const std::uint64_t n = parse_u64(s.substr(0, digits), "duration");
  const std::string unit = s.substr(digits);
  if (unit.empty() || unit == "ms") return n;
  if (unit == "s") return n * 1'000;
  if (unit == "m") return n * 60'000;
  if (unit == "h") return n * 3'600'000;
  if (unit == "d") return n * 86'400'000;
  fail(Errc::config_error, "unknown duration unit '" + unit + "'");
}

ServiceConfig parse_config_text(const std::string& text) {
  ServiceConfig cfg;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      fail(Errc::config_error,
           "line " + std::to_string(lineno) + ": expected key=value");
    apply(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

ServiceConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::io_error, "cannot open config " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  ServiceConfig cfg = parse_config_text(buf.str());
  apply_env_overrides(cfg);
  return cfg;
}

void apply_env_overrides(ServiceConfig& cfg) {
  static const char* keys[] = {"listen_addr", "key_file", "epoch_base",
                               "retention",   "intervals", "variant",
                               "z",           "b",         "r",
                               "seed",        "mode"};
  for (const char* key : keys) {
    std::string env = "TIMECLAVE_";
    for (const char* p = key; *p; ++p)
      env += static_cast<char>(std::toupper(static_cast<unsigned char>(*p)));
    if (const char* v = std::getenv(env.c_str())) apply(cfg, key, v);
  }
}

std::pair<std::string, std::uint16_t> parse_addr(const std::string& addr) {
  const std::size_t colon = addr.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == addr.size())
    fail(Errc::config_error, "address '" + addr + "' is not host:port");
  const std::uint64_t port = parse_u64(addr.substr(colon + 1), "port");
  if (port > 0xFFFF)
    fail(Errc::config_error, "port out of range in '" + addr + "'");
  return {addr.substr(0, colon), static_cast<std::uint16_t>(port)};
}

}  // namespace timeclave
