#pragma once

#include <stdexcept>
#include <string>

namespace timeclave {

enum class Errc {
  invalid_param,
  index_out_of_range,
  capacity_exceeded,
  stash_overflow,
  non_finite_value,
  late_point,
  empty_range,
  unaligned_range,
  auth_failure,
  wire_error,
  insufficient_samples,
  config_error,
  io_error,
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::invalid_param:        return "InvalidParam";
    case Errc::index_out_of_range:   return "IndexOutOfRange";
    case Errc::capacity_exceeded:    return "CapacityExceeded";
    case Errc::stash_overflow:       return "StashOverflow";
    case Errc::non_finite_value:     return "NonFiniteValue";
    case Errc::late_point:           return "LatePoint";
    case Errc::empty_range:          return "EmptyRange";
    case Errc::unaligned_range:      return "UnalignedRange";
    case Errc::auth_failure:         return "AuthFailure";
    case Errc::wire_error:           return "WireError";
    case Errc::insufficient_samples: return "InsufficientSamples";
    case Errc::config_error:         return "ConfigError";
    case Errc::io_error:             return "IoError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& detail)
      : std::runtime_error(std::string(errc_name(code)) + ": " + detail),
        code_(code) {}

  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& detail) {
  throw Error(code, detail);
}

}  // namespace timeclave
