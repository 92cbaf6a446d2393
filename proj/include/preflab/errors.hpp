#pragma once

#include <stdexcept>
#include <string>

namespace preflab {

/// Malformed instance or policy (bad context weights, rows without mass).
class InvalidInstance : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A sampling distribution that cannot produce what is asked of it.
class InvalidDistribution : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An operation was called outside its documented domain.
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A preference triple references a response the reference policy never emits.
class SupportError : public std::invalid_argument {
 public:
  SupportError(const std::string& what, int triple_index)
      : std::invalid_argument(what), triple_index_(triple_index) {}
  int triple_index() const { return triple_index_; }

 private:
  int triple_index_;
};

/// Optimization produced a non-finite loss.
class TrainingFailure : public std::runtime_error {
 public:
  TrainingFailure(const std::string& what, int iteration)
      : std::runtime_error(what + " (iteration " + std::to_string(iteration) + ")"),
        iteration_(iteration) {}
  int iteration() const { return iteration_; }

 private:
  int iteration_;
};

/// Second-moment matrix too ill-conditioned to invert without ridge.
class SingularCovariance : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A seeded construction could not be completed (e.g. rank retries exhausted).
class SeedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace preflab
