#pragma once

#include <stdexcept>
#include <string>

namespace ivg {

// Base class for every error raised by the library. The CLI maps
// ValidationError to exit status 1 and everything else to 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad input or violated precondition that the caller can fix.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class RangeError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class MalformedBoxError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class NotFoundError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Scene placement ran out of retries.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

// Every hypothesis was filtered out of a belief.
class DegenerateBeliefError : public Error {
 public:
  using Error::Error;
};

// Illegal state transition (out-of-turn post, double scoring, ...).
class ConflictError : public Error {
 public:
  using Error::Error;
};

class StateError : public Error {
 public:
  using Error::Error;
};

// Duplicate round index or record id during a merge.
class CollisionError : public Error {
 public:
  using Error::Error;
};

enum class PolicyErrorKind { kTimeout, kMalformedResponse, kTransport, kInternal };

const char* to_string(PolicyErrorKind kind);

// Failure inside a policy call. Episodes catch these and record them
// instead of propagating.
class PolicyError : public Error {
 public:
  PolicyError(PolicyErrorKind kind, const std::string& what)
      : Error(what), kind_(kind) {}
  PolicyErrorKind kind() const { return kind_; }

 private:
  PolicyErrorKind kind_;
};

class TimeoutError : public PolicyError {
 public:
  explicit TimeoutError(const std::string& what)
      : PolicyError(PolicyErrorKind::kTimeout, what) {}
};

class MalformedResponseError : public PolicyError {
 public:
  explicit MalformedResponseError(const std::string& what)
      : PolicyError(PolicyErrorKind::kMalformedResponse, what) {}
};

class TransportError : public PolicyError {
 public:
  explicit TransportError(const std::string& what)
      : PolicyError(PolicyErrorKind::kTransport, what) {}
};

}  // namespace ivg
