#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mma {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed URI. offset() is the byte index of the first offending character.
class UriError : public Error {
 public:
  UriError(const std::string& what, std::size_t offset)
      : Error(what + " at byte offset " + std::to_string(offset)),
        offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

// Document-level parse failure. line() is 1-based; 0 when not line-oriented.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace mma
