#pragma once

#include <stdexcept>
#include <string>

namespace rcpolicy {

// Bad input: malformed files, out-of-range parameters, violated preconditions.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// An estimator failed to converge or produced a non-finite quantity.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool ok, const std::string& message) {
  if (!ok) throw ValidationError(message);
}

}  // namespace rcpolicy
