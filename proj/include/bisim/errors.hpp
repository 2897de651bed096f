#pragma once

#include <stdexcept>
#include <string>

namespace bisim {

/// Shape or index inconsistencies in caller-supplied data.
class StructuralError : public std::invalid_argument {
 public:
  explicit StructuralError(const std::string& what) : std::invalid_argument(what) {}
};

/// A documented precondition does not hold.
class PreconditionError : public std::invalid_argument {
 public:
  explicit PreconditionError(const std::string& what) : std::invalid_argument(what) {}
};

/// An iteration exceeded its hard cap. For contractive operators this means a bug.
class ConvergenceError : public std::runtime_error {
 public:
  explicit ConvergenceError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace bisim
