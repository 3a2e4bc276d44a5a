#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace netspill {

/// Malformed or out-of-contract input (bad indices, schema violations, invalid parameters).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A random generator exhausted its retry budget.
class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An iterative fit stopped without meeting its tolerance. Carries the last iterate.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, std::vector<double> last_iterate)
      : std::runtime_error(what), last_iterate_(std::move(last_iterate)) {}

  const std::vector<double>& last_iterate() const noexcept { return last_iterate_; }

 private:
  std::vector<double> last_iterate_;
};

/// A weight denominator underflowed: the observed exposure/censoring
/// configuration has numerically zero probability for `node`.
class PositivityError : public std::runtime_error {
 public:
  PositivityError(const std::string& what, long node) : std::runtime_error(what), node_(node) {}

  long node() const noexcept { return node_; }

 private:
  long node_;
};

/// Linear algebra failure (ill-conditioned sandwich, negative variance).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace netspill
