#pragma once

#include <stdexcept>
#include <string>

namespace bevmap {

/// Base class for all library errors. `stage()` names the pipeline step that
/// raised it ("load", "project", "align", ...), so front-ends can attribute
/// failures without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(std::string stage, const std::string& message)
      : std::runtime_error(stage + ": " + message), stage_(std::move(stage)) {}

  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

/// Bad input: malformed files, shape mismatches, violated preconditions.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values or otherwise failed numerics.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace bevmap
