#pragma once

#include <stdexcept>
#include <string>

namespace detcal {

/// Invalid input or configuration. Maps to CLI exit code 1.
class ValidationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// File could not be opened, read or written. Maps to CLI exit code 2.
class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace detcal
