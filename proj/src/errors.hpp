#pragma once

#include <stdexcept>
#include <string>

namespace modrel {

// Status codes shared with the C API and the CLI exit codes.
enum StatusCode {
  kStatusOk = 0,
  kStatusUsage = 1,
  kStatusConfig = 2,
  kStatusIo = 3,
  kStatusNumeric = 4,
  kStatusEstimation = 5,
  kStatusNoPriors = 6,
  kStatusVersion = 7,
};

class Error : public std::runtime_error {
 public:
  Error(int code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
  int code() const { return code_; }

 private:
  int code_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error(kStatusConfig, msg) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& msg) : Error(kStatusIo, msg) {}
};

// Non-finite value produced by a named primitive.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& op, const std::string& where = "")
      : Error(kStatusNumeric, where.empty() ? "non-finite value in primitive '" + op + "'"
                                            : "non-finite value in primitive '" + op + "' (" + where + ")"),
        op_(op) {}
  const std::string& op() const { return op_; }

 private:
  std::string op_;
};

class EstimationError : public Error {
 public:
  EstimationError(const std::string& factor, int value)
      : Error(kStatusEstimation,
              "mixture estimation failed: factor '" + factor + "' has no samples with value " +
                  std::to_string(value)),
        factor_(factor),
        value_(value) {}
  const std::string& factor() const { return factor_; }
  int value() const { return value_; }

 private:
  std::string factor_;
  int value_;
};

class PriorsMissingError : public Error {
 public:
  explicit PriorsMissingError(const std::string& msg = "priors not estimated")
      : Error(kStatusNoPriors, msg) {}
};

class VersionError : public Error {
 public:
  explicit VersionError(const std::string& msg) : Error(kStatusVersion, msg) {}
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& msg) : Error(kStatusUsage, msg) {}
};

}  // namespace modrel
