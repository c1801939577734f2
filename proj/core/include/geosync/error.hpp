#pragma once

#include <stdexcept>
#include <string>

namespace geosync {

/// Bad input data: malformed files, out-of-range parameters, broken preconditions.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// A runtime self-check failed (round bound, digest divergence, stats mismatch).
class InvariantViolation : public std::logic_error {
 public:
  explicit InvariantViolation(const std::string& what) : std::logic_error(what) {}
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ValidationError(msg);
}

}  // namespace geosync
