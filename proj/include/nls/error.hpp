#pragma once

#include <stdexcept>
#include <string>

namespace nls {

enum class ErrorKind {
  InvalidArgument,
  SizeLimit,
  Config,
  Numeric,
  Io,
  Internal,
};

// Single exception type for the library. The C API maps `kind()` onto its
// status codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void require(bool condition, const std::string& what) {
  if (!condition) throw Error(ErrorKind::InvalidArgument, what);
}

}  // namespace nls
