#pragma once

#include <cstddef>
#include <memory>
#include <stdexcept>
#include <string>

namespace backchain {

struct ProofTrace;

/// Text did not match any template of the active pack. `position` is the
/// character offset of the first token that failed to match.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::string message, std::size_t position)
      : std::runtime_error(message + " (at offset " + std::to_string(position) + ")"),
        position_(position) {}

  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

/// Structured data violates a schema or a domain invariant. `path` is a JSON
/// pointer-like location such as `$.facts[2].subject`.
class SchemaError : public std::runtime_error {
 public:
  SchemaError(std::string path, const std::string& message)
      : std::runtime_error(path + ": " + message), path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// Raised by a reasoning backend. The engine attaches the partial trace of
/// the aborted proof before rethrowing.
class BackendError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;

  void attach_trace(std::shared_ptr<const ProofTrace> trace) { partial_trace_ = std::move(trace); }
  const std::shared_ptr<const ProofTrace>& partial_trace() const noexcept { return partial_trace_; }

 private:
  std::shared_ptr<const ProofTrace> partial_trace_;
};

class UnificationError : public BackendError {
 public:
  using BackendError::BackendError;
};

class TransportError : public BackendError {
 public:
  using BackendError::BackendError;
};

class TimeoutError : public TransportError {
 public:
  using TransportError::TransportError;
};

/// A completion could not be mapped onto the module's output grammar.
class CompletionParseError : public BackendError {
 public:
  CompletionParseError(const std::string& module, std::string completion)
      : BackendError("unparseable " + module + " completion: " + completion),
        completion_(std::move(completion)) {}

  const std::string& completion() const noexcept { return completion_; }

 private:
  std::string completion_;
};

class PromptPackError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InconsistencyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class GenerationExhausted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class PoolCollisionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace backchain
