#pragma once

#include <stdexcept>
#include <string>

namespace blqr {

// Error hierarchy mirrors the CLI exit-code contract:
//   usage/config -> 1, data -> 2, numeric -> 3.
class Error : public std::runtime_error {
 public:
  Error(std::string cls, int exit_code, const std::string& msg)
      : std::runtime_error(msg), cls_(std::move(cls)), exit_code_(exit_code) {}
  const std::string& error_class() const { return cls_; }
  int exit_code() const { return exit_code_; }

 private:
  std::string cls_;
  int exit_code_;
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& msg) : Error("usage", 1, msg) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error("config", 1, msg) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& msg) : Error("data", 2, msg) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& msg) : Error("numeric", 3, msg) {}
};

// Invalid parameter passed to a statistical kernel (bad quantile level,
// nonpositive scale, dimension mismatch).
class DomainError : public NumericError {
 public:
  explicit DomainError(const std::string& msg) : NumericError(msg) {}
};

}  // namespace blqr
