#pragma once

#include <stdexcept>
#include <string>

namespace uqnn {

/// Base class for all library errors.
class Error : public std::runtime_error {
  public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Shape mismatch between operands.
class DimensionError : public Error {
  public:
    explicit DimensionError(const std::string& msg) : Error(msg) {}
};

/// Argument outside its documented domain.
class ValidationError : public Error {
  public:
    explicit ValidationError(const std::string& msg) : Error(msg) {}
};

/// Matrix factorization failed (e.g. non-positive pivot).
class FactorizationError : public Error {
  public:
    FactorizationError(const std::string& msg, std::size_t pivot)
        : Error(msg), pivot_index(pivot) {}
    std::size_t pivot_index;
};

/// File could not be parsed; message carries line/field context.
class ParseError : public Error {
  public:
    explicit ParseError(const std::string& msg) : Error(msg) {}
};

/// Distribution collapses to a point mass; callers must branch.
class DegenerateLawError : public Error {
  public:
    explicit DegenerateLawError(const std::string& msg) : Error(msg) {}
};

/// Request exceeds a hard capability limit of the implementation.
class CapabilityError : public Error {
  public:
    explicit CapabilityError(const std::string& msg) : Error(msg) {}
};

/// Optimizer diverged or produced non-finite loss.
class TrainingError : public Error {
  public:
    explicit TrainingError(const std::string& msg) : Error(msg) {}
};

} // namespace uqnn
