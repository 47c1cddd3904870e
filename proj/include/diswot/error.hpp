#pragma once

#include <stdexcept>
#include <string>

namespace diswot {

// Runtime or data failure (bad file, shape mismatch, unsatisfiable constraint).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller supplied an argument outside the documented domain (unknown name,
// malformed descriptor, missing id). The CLI maps these to exit code 2.
class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace diswot
