#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace stepwise {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A configuration field is outside its declared range.
class RangeError : public Error {
 public:
  RangeError(std::string field, const std::string& detail)
      : Error(field + ": " + detail), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class EmptyLexicon : public Error {
 public:
  EmptyLexicon() : Error("lexicon: TrigReason strategy requires a non-empty hesitation lexicon") {}
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class EmptyStep : public Error {
 public:
  EmptyStep() : Error("step has no tokens") {}
};

/// Connection failure or timeout. Retryable.
class TransportError : public Error {
 public:
  using Error::Error;
};

/// The endpoint answered with a body we cannot interpret.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

class LogprobsUnavailable : public Error {
 public:
  using Error::Error;
};

class UnparseableScore : public Error {
 public:
  explicit UnparseableScore(const std::string& reply)
      : Error("no score in [0,9] found in judge reply: \"" + reply + "\"") {}
};

/// Malformed trace, dataset or results file. Carries the 1-based line number.
class SchemaError : public Error {
 public:
  SchemaError(std::size_t line, const std::string& detail)
      : Error("line " + std::to_string(line) + ": " + detail), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class EmptySession : public Error {
 public:
  EmptySession() : Error("session has no reasoning steps") {}
};

class EmptyInput : public Error {
 public:
  using Error::Error;
};

}  // namespace stepwise
