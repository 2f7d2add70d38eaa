#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace collusion {

/// Bad caller input: empty datasets, out-of-box prices, missing parameters.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A configuration that violates a model invariant (e.g. pbar <= 0).
class ConfigError : public InputError {
 public:
  using InputError::InputError;
};

/// Malformed file content. Carries the 1-based line number of the offending row.
class ParseError : public InputError {
 public:
  ParseError(std::string file, std::size_t line, const std::string& what)
      : InputError(file + ":" + std::to_string(line) + ": " + what),
        file_(std::move(file)),
        line_(line) {}

  const std::string& file() const noexcept { return file_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string file_;
  std::size_t line_;
};

class UnsupportedAlpha : public InputError {
 public:
  using InputError::InputError;
};

/// The sampler produced no acceptance within its stall window.
class GenerationStalled : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Something that should be impossible (e.g. an unbounded inverse LP).
class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace collusion
