#pragma once

#include <stdexcept>
#include <string>

namespace commspec {

// Invalid argument or violated precondition (e.g. z outside C_L).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A rational map was evaluated at (or numerically next to) one of its poles.
class PoleError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Iterative solver gave up. Carries the best residual it reached.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double best_residual)
      : std::runtime_error(what), best_residual_(best_residual) {}

  double best_residual() const noexcept { return best_residual_; }

 private:
  double best_residual_;
};

class SingularError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input file (CSV, JSON, binary matrix).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace commspec
