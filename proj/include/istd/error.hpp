#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace istd {

enum class ErrorKind {
  config,          // bad shapes, ratios, options
  input,           // bad dataset / image / mask
  weight_missing,  // a required tensor is absent
  weight_unknown,  // a tensor nobody asked for
  weight_shape,    // tensor present with the wrong dims
  bad_magic,
  bad_version,
  truncated,
  io,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::config: return "config";
    case ErrorKind::input: return "input";
    case ErrorKind::weight_missing: return "weight-missing";
    case ErrorKind::weight_unknown: return "weight-unknown";
    case ErrorKind::weight_shape: return "weight-shape";
    case ErrorKind::bad_magic: return "bad-magic";
    case ErrorKind::bad_version: return "bad-version";
    case ErrorKind::truncated: return "truncated";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool ok, const std::string& what) {
  if (!ok) fail(ErrorKind::config, what);
}

}  // namespace istd
