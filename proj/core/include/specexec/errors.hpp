#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace specexec {

// A moment or expectation that is infinite for the given Pareto shape.
class DivergingMomentError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Queue utilization reached or exceeded 1.
class UnstableQueueError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// The two-copy cloning system has no steady state at this load.
class SaturationError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// An iterative method hit its iteration cap. Carries whatever history the
// method recorded so callers can inspect how far it got.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, std::vector<double> trace = {})
      : std::runtime_error(what), trace_(std::move(trace)) {}

  const std::vector<double>& trace() const noexcept { return trace_; }

 private:
  std::vector<double> trace_;
};

}  // namespace specexec
