#pragma once

#include <stdexcept>
#include <string>

namespace pcsp {

// Argument lies outside the domain of an operation (position out of range,
// foreign variable, malformed set).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Operation applied to an input it is not defined for.
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Input is well formed but beyond a configured enumeration bound.
class CapacityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A solver's structural precondition does not hold for this instance.
class NotApplicable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Document rejected during parsing; `path` names the offending field.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::string path, const std::string& what)
      : std::runtime_error(path + ": " + what), path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace pcsp
