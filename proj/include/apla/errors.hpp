#pragma once

#include <stdexcept>
#include <string>

namespace apla {

// Library errors carry a stable machine-readable code alongside the message.
// The CLI maps NumericError to exit code 3 and everything else to 1/2.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(code + ": " + message), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace apla
