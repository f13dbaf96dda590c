#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dlm {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration or out-of-contract argument.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Reward expression failed to tokenize or parse. `position` is a 0-based
/// byte offset into the source.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t position)
      : Error(what + " at position " + std::to_string(position)), position_(position) {}

  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

/// Reward evaluation produced a non-finite value (e.g. division by zero).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// LLM backend failure (transport, HTTP status, transcript exhausted).
class LlmError : public Error {
 public:
  using Error::Error;
};

/// LLM answer did not follow the requested format.
class ResponseError : public Error {
 public:
  using Error::Error;
};

}  // namespace dlm
