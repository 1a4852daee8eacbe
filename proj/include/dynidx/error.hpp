#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dynidx {

// Base of every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input text (JSON, SQL, decimal literals). `line` is 1-based, 0 when unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0, std::string field = {})
      : Error(format(what, line, field)), line_(line), field_(std::move(field)) {}

  std::size_t line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }

 private:
  static std::string format(const std::string& what, std::size_t line, const std::string& field) {
    std::string out;
    if (line != 0) out += "line " + std::to_string(line) + ": ";
    if (!field.empty()) out += field + ": ";
    return out + what;
  }

  std::size_t line_;
  std::string field_;
};

// Well-formed input that breaks a domain invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// A SQL construct outside the supported analytical grammar.
class UnsupportedConstruct : public Error {
 public:
  UnsupportedConstruct(const std::string& what, std::string token)
      : Error(what + " (at '" + token + "')"), token_(std::move(token)) {}

  const std::string& token() const noexcept { return token_; }

 private:
  std::string token_;
};

// Reference to a table or attribute the schema does not declare (or declares ambiguously).
class ResolutionError : public Error {
 public:
  using Error::Error;
};

// Candidate index whose composite bitmap count exceeds the configured limit.
class InfeasibleIndex : public Error {
 public:
  using Error::Error;
};

// Index itemset that the query cannot use.
class NotUsable : public Error {
 public:
  using Error::Error;
};

// Persisted state that violates a stored-data invariant (corrupted or hand-edited file).
class InvariantViolation : public Error {
 public:
  using Error::Error;
};

// Post-condition failure inside the library itself.
class InternalError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace dynidx
