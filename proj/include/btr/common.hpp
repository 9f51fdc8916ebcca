#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace btr {

/// Base class for all errors thrown by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Invalid argument or malformed input data.
struct InputError : Error {
  using Error::Error;
};

/// Operation would exceed a configured capacity limit.
struct CapacityError : Error {
  using Error::Error;
};

/// Text input that could not be parsed; carries the 1-based line number.
struct ParseError : Error {
  ParseError(const std::string& msg, std::size_t line_no)
      : Error("line " + std::to_string(line_no) + ": " + msg), line(line_no) {}
  std::size_t line;
};

/// Numerical failure (non-finite value where a finite one is required).
struct NumericError : Error {
  using Error::Error;
};

/// Observed entries are either real-valued or {0,1}-valued.
enum class DataKind { continuous, binary };

inline double sigmoid(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                  : std::exp(x) / (1.0 + std::exp(x));
}

std::string to_string(DataKind kind);
DataKind data_kind_from_string(const std::string& s);

/// Execution policy for parallel kernels.
///
/// threads == 0 means "use the OpenMP default". With deterministic set,
/// reductions use a fixed chunk size so results do not depend on the
/// thread count; otherwise results are reproducible only for a fixed
/// thread count.
struct ExecPolicy {
  int threads = 0;
  bool deterministic = false;

  int resolved_threads() const;
};

/// Library version plus the git revision it was built from.
std::string version_string();

}  // namespace btr
