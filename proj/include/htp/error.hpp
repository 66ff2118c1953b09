#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace htp {

/// Base of every error raised by the library. Callers that only need a
/// message can catch this; the CLI maps subclasses onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Ungrammatical statement or trace text.
///
/// `position` is a character offset into the offending line, `token` the
/// zero-based index of the token where parsing stopped. `line` is set when
/// the error comes from a multi-line input.
class ParseError : public Error {
 public:
  ParseError(std::string message, std::size_t position, std::size_t token,
             std::vector<std::string> expected);

  std::size_t position() const { return position_; }
  std::size_t token() const { return token_; }
  const std::vector<std::string>& expected() const { return expected_; }
  std::optional<std::size_t> line() const { return line_; }

  ParseError at_line(std::size_t line) const;

 private:
  std::size_t position_;
  std::size_t token_;
  std::vector<std::string> expected_;
  std::optional<std::size_t> line_;
};

/// A theory that is grammatical but violates a structural invariant
/// (duplicate facts, explicit negation under the closed-world assumption).
class TheoryError : public Error {
 public:
  using Error::Error;
};

class StratificationError : public Error {
 public:
  StratificationError(std::vector<std::string> cycle);
  const std::vector<std::string>& cycle() const { return cycle_; }

 private:
  std::vector<std::string> cycle_;
};

class InconsistencyError : public Error {
 public:
  using Error::Error;
};

class NotDerivedError : public Error {
 public:
  using Error::Error;
};

/// Malformed corpus / fixture / records file. `line` is 1-based.
class FormatError : public Error {
 public:
  FormatError(std::string message, std::size_t line);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class CertificationError : public Error {
 public:
  CertificationError(std::string message, std::vector<std::string> ids);
  const std::vector<std::string>& ids() const { return ids_; }

 private:
  std::vector<std::string> ids_;
};

class AdapterError : public Error {
 public:
  AdapterError(std::string message, std::string field_path);
  const std::string& field_path() const { return field_path_; }

 private:
  std::string field_path_;
};

class GenerationError : public Error {
 public:
  using Error::Error;
};

/// A depth beyond the largest bucket.
class RangeError : public Error {
 public:
  using Error::Error;
};

/// Invalid arguments or configuration (CLI usage, generator spec, sample size).
class UsageError : public Error {
 public:
  using Error::Error;
};

class BackendError : public Error {
 public:
  enum class Kind { Transport, RateLimitExhausted, MissingFixture, BadResponse };

  BackendError(Kind kind, std::string message);
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

const char* to_string(BackendError::Kind kind);

}  // namespace htp
