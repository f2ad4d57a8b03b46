#pragma once

#include <exception>
#include <string>
#include <utility>

namespace homsdm {

/// Error category, doubles as the CLI exit code.
enum class ErrorKind : int {
  usage = 1,    // bad invocation / bad configuration value
  data = 2,     // malformed or inconsistent input data / files
  numeric = 3,  // numerical guard tripped (aliasing, dark port, ...)
};

class Error : public std::exception {
 public:
  Error(ErrorKind kind, std::string message) : kind_(kind), message_(std::move(message)) {}

  const char* what() const noexcept override { return message_.c_str(); }
  ErrorKind kind() const noexcept { return kind_; }
  int exit_code() const noexcept { return static_cast<int>(kind_); }

  /// Prefix the message with the pipeline stage that raised it.
  void prepend_stage(const std::string& stage) { message_ = stage + ": " + message_; }

 private:
  ErrorKind kind_;
  std::string message_;
};

struct GridError : Error {
  explicit GridError(std::string m) : Error(ErrorKind::data, std::move(m)) {}
};
struct SizeError : Error {
  explicit SizeError(std::string m) : Error(ErrorKind::data, std::move(m)) {}
};
struct FormatError : Error {
  explicit FormatError(std::string m) : Error(ErrorKind::data, std::move(m)) {}
};
struct ConfigError : Error {
  explicit ConfigError(std::string m) : Error(ErrorKind::data, std::move(m)) {}
};
struct NormalizationError : Error {
  explicit NormalizationError(std::string m) : Error(ErrorKind::numeric, std::move(m)) {}
};
struct DegenerateStateError : Error {
  explicit DegenerateStateError(std::string m) : Error(ErrorKind::numeric, std::move(m)) {}
};
struct DarkPortError : Error {
  explicit DarkPortError(std::string m) : Error(ErrorKind::numeric, std::move(m)) {}
};
struct AliasingError : Error {
  explicit AliasingError(std::string m) : Error(ErrorKind::numeric, std::move(m)) {}
};
struct ScanTooShortError : Error {
  explicit ScanTooShortError(std::string m) : Error(ErrorKind::numeric, std::move(m)) {}
};
struct ResolutionError : Error {
  explicit ResolutionError(std::string m) : Error(ErrorKind::numeric, std::move(m)) {}
};
struct InsufficientBandwidthError : Error {
  explicit InsufficientBandwidthError(std::string m) : Error(ErrorKind::numeric, std::move(m)) {}
};

}  // namespace homsdm
