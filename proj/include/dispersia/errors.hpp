#pragma once

#include <stdexcept>
#include <string>

namespace dispersia {

// An iterative routine (quadrature, bisection, golden section) stopped without
// reaching its target tolerance. Carries the error estimate it did achieve so
// callers can decide whether the result is still usable.
class NonconvergenceError : public std::runtime_error {
  public:
    NonconvergenceError(const std::string& what, double achieved)
        : std::runtime_error(what + " (achieved error " + std::to_string(achieved) + ")"),
          achieved_error(achieved) {}

    double achieved_error;
};

// A computation was refused because it would exceed a hard work or memory
// guard (e.g. type enumeration past the configured cap).
class ResourceError : public std::runtime_error {
  public:
    explicit ResourceError(const std::string& what) : std::runtime_error(what) {}
};

// The requested optimum or threshold does not exist: empty constraint set,
// unbounded objective, or a probability that never reaches its target.
class InfeasibleError : public std::runtime_error {
  public:
    explicit InfeasibleError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace dispersia
