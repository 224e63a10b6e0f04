#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace meetbrain {

enum class ErrorKind {
  Config,
  Template,
  Input,
  NotFound,
  Transport,
  Statistics,
  Timeline,
  Data,
  Validation,
  Conflict,
  OutOfWindow,
  Consistency,
  Schema,
  Planning,
  DegenerateModel,
  Usage,
};

std::string_view to_string(ErrorKind kind);

// Base error for every failure the library reports. The kind is stable and
// machine-readable; the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message, bool retryable = false)
      : std::runtime_error(message), kind_(kind), retryable_(retryable) {}

  ErrorKind kind() const noexcept { return kind_; }
  bool retryable() const noexcept { return retryable_; }

 private:
  ErrorKind kind_;
  bool retryable_;
};

}  // namespace meetbrain
