#pragma once

#include <stdexcept>
#include <string>

namespace cet {

// Library error taxonomy.  Every failure surfaced across the C API boundary is
// one of these; the C wrapper maps the type to an error code and keeps the
// message.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Shape/axis mismatch in a tensor operation.
struct DimensionError : Error {
  using Error::Error;
};

// Invalid model or training configuration (bad JSON, unknown key, bad value).
struct ConfigError : Error {
  using Error::Error;
};

// API misuse: backward on a non-scalar, double backward, missing tape, ...
struct UsageError : Error {
  using Error::Error;
};

// Numeric failure at runtime (non-finite loss, divergent training).
struct NumericError : Error {
  using Error::Error;
};

// Malformed binary artifact (checkpoint or dataset file).
struct FormatError : Error {
  using Error::Error;
};

// Filesystem failure (missing file, unwritable path).
struct IOError : Error {
  using Error::Error;
};

}  // namespace cet
