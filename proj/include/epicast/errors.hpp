#pragma once

#include <stdexcept>
#include <string>

namespace epicast {

// Bad input data, schema violations, invalid configuration. The CLI maps
// this to exit code 1; anything else escaping a stage maps to 2.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace epicast
