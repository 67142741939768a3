#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace solarqm {

/// Caller-supplied data violates a precondition or format rule.
/// The CLI maps this to exit code 2.
class InvalidInput : public std::runtime_error {
public:
  explicit InvalidInput(const std::string& msg) : std::runtime_error(msg) {}
};

/// Filesystem or stream failure. CLI exit code 1.
class IoError : public std::runtime_error {
public:
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

/// A file exists but its contents are structurally inconsistent
/// (payload size does not match metadata, unparsable sidecar, ...).
/// CLI exit code 1.
class CorruptFile : public IoError {
public:
  explicit CorruptFile(const std::string& msg) : IoError(msg) {}
};

/// A (pixel, month) cell whose pooled training sample is smaller than the
/// configured floor. Carries the offending cell. CLI exit code 3.
class InsufficientData : public std::runtime_error {
public:
  InsufficientData(std::size_t at_pixel, int at_month, std::size_t got, std::size_t need)
      : std::runtime_error("insufficient data at pixel " + std::to_string(at_pixel) +
                           ", month " + std::to_string(at_month) + ": pooled sample has " +
                           std::to_string(got) + " values, need at least " +
                           std::to_string(need)),
        pixel(at_pixel), month(at_month), sample_size(got), required(need) {}

  std::size_t pixel;
  int month;
  std::size_t sample_size;
  std::size_t required;
};

}  // namespace solarqm
