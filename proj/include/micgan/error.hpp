#pragma once

#include <stdexcept>
#include <string>

namespace micgan {

// Dimension mismatch between operands.
class ShapeError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

// A value violates an operation's precondition.
class ArgumentError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

// Mode index out of range.
class IndexError : public std::out_of_range {
public:
  using std::out_of_range::out_of_range;
};

// Non-SPD covariance, non-finite value, and similar.
class NumericError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Malformed binary or text input (bad magic, truncation, bad version).
class FormatError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Internal bookkeeping broke (e.g. assignment counts out of sync).
class InvariantError : public std::logic_error {
public:
  using std::logic_error::logic_error;
};

class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace micgan
