#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mdr {

// Every failure raised by the toolkit derives from Error. The C API maps the
// subclasses onto status codes, so the hierarchy is deliberately flat.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A caller-supplied value violates an operation's precondition.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// A file could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

// Malformed input text (ARPA, JSON, JSONL, ...). line is 1-based, 0 if unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : Error(line ? what + " (line " + std::to_string(line) + ")" : what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Input bytes are not valid UTF-8.
class DecodeError : public ParseError {
 public:
  DecodeError(const std::string& what, std::size_t byte_offset, std::size_t line = 0)
      : ParseError(what + " at byte offset " + std::to_string(byte_offset), line),
        byte_offset_(byte_offset) {}
  std::size_t byte_offset() const { return byte_offset_; }

 private:
  std::size_t byte_offset_;
};

}  // namespace mdr
