#pragma once

#include <stdexcept>
#include <string>

namespace posthoc {

// Raised when inputs violate a documented precondition: malformed records,
// out-of-range options, degenerate training sets. The command-line driver
// maps this to exit code 2; every other failure exits 1.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace posthoc
