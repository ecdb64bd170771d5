#pragma once
// Status codes, the exception type used across the library, and a couple of
// shared numeric helpers. The status values are shared verbatim with the
// C API and the CLI exit codes.

#include <cmath>
#include <stdexcept>
#include <string>

namespace densreg {

enum class Status : int {
  ok = 0,
  internal = 1,
  config_error = 2,
  data_error = 3,
  numeric_error = 4,
  io_error = 5,
  invalid_argument = 6,
};

class Error : public std::runtime_error {
 public:
  Error(Status status, const std::string& message)
      : std::runtime_error(message), status_(status) {}
  Status status() const { return status_; }

 private:
  Status status_;
};

[[noreturn]] inline void fail(Status status, const std::string& message) {
  throw Error(status, message);
}

// Overflow-safe softplus and its derivative.
inline double stable_softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace densreg
