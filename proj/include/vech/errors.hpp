#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace vech {

/// Raised when a caller-provided argument is outside the documented domain
/// (e.g. a zero mesh resolution).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A matrix or scalar function was evaluated outside its domain
/// (logarithm of a non-positive eigenvalue and similar).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Fields, meshes or coefficients are mutually inconsistent.
class InvalidState : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A configuration failed a hard validation check.
class InvalidConfig : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A linear solver broke down or ran out of iterations.
class SolverFailure : public std::runtime_error {
 public:
  SolverFailure(const std::string& what, double final_residual, int iterations)
      : std::runtime_error(what), final_residual_(final_residual), iterations_(iterations) {}

  double final_residual() const { return final_residual_; }
  int iterations() const { return iterations_; }

 private:
  double final_residual_;
  int iterations_;
};

/// A nonlinear iteration failed; carries the residual history.
class NonConvergence : public std::runtime_error {
 public:
  NonConvergence(const std::string& what, std::vector<double> history)
      : std::runtime_error(what), history_(std::move(history)) {}

  const std::vector<double>& history() const { return history_; }

 private:
  std::vector<double> history_;
};

}  // namespace vech
