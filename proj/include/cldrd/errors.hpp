#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cldrd {

/// Root of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input line. Carries the 1-based line number when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : Error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class IntegrityError : public Error { using Error::Error; };
class IoError : public Error { using Error::Error; };
class ShapeError : public Error { using Error::Error; };
class BoundsError : public Error { using Error::Error; };
class ConfigError : public Error { using Error::Error; };
class NumericError : public Error { using Error::Error; };
class EvalError : public Error { using Error::Error; };
class LookupError : public Error { using Error::Error; };
class DomainError : public Error { using Error::Error; };

}  // namespace cldrd
