#pragma once

#include <stdexcept>
#include <string>

namespace tsct {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Input violates a documented precondition (empty series, mixed lengths, ...).
class PreconditionError : public Error {
public:
  using Error::Error;
};

/// Data failed validation (non-finite samples, missing classes, duplicate names, ...).
class DataError : public Error {
public:
  using Error::Error;
};

/// Malformed text input. Carries the 1-based line number when known.
class ParseError : public Error {
public:
  ParseError(const std::string& what, std::size_t line = 0)
      : Error(line == 0 ? what : what + " (line " + std::to_string(line) + ")"), line_(line) {}

  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

/// Unknown dataset name or other failed lookup.
class LookupError : public Error {
public:
  using Error::Error;
};

/// Filesystem failure; the message always names the path.
class IoError : public Error {
public:
  using Error::Error;
};

/// Division by a zero baseline accuracy.
class UndefinedVariationError : public Error {
public:
  using Error::Error;
};

/// A model file could not be decoded.
class ModelFormatError : public Error {
public:
  enum class Kind { bad_magic, unknown_version, malformed_header, shape_mismatch, truncated, invalid_value };

  ModelFormatError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

private:
  Kind kind_;
};

} // namespace tsct
