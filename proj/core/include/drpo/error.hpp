#pragma once

#include <stdexcept>
#include <string>

namespace drpo {

// Argument outside an operation's documented domain (k = 0, NaN leaf,
// division by zero, bad config value).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed or inconsistent dataset / checkpoint content.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A computation produced a non-finite value or failed a numeric check.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace drpo
