#pragma once

#include <stdexcept>
#include <string>

namespace rebot {

// Base for every error raised by the library. Subclasses name the contract
// that was violated so callers (and the CLI) can map them to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error { using Error::Error; };
class ConfigError : public Error { using Error::Error; };
class UsageError : public Error { using Error::Error; };
class StreamError : public Error { using Error::Error; };
class DataError : public Error { using Error::Error; };
// Degraded and clean sets that do not line up.
class PairingError : public DataError { using DataError::DataError; };
class SpecError : public Error { using Error::Error; };
class MetricError : public Error { using Error::Error; };
class FormatError : public Error { using Error::Error; };
class CheckpointMismatch : public Error { using Error::Error; };

}  // namespace rebot
