#pragma once

#include <stdexcept>
#include <string>

namespace avsal {

// Base of every error the library throws.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Missing or insufficient input (absent files, too few frames).
class InputError : public Error {
public:
  using Error::Error;
};

// Input exists but is malformed or uses an unsupported encoding.
class FormatError : public Error {
public:
  using Error::Error;
};

// A caller-supplied parameter violates an operation's precondition.
class ParameterError : public Error {
public:
  using Error::Error;
};

// Filesystem write/read failure.
class IoError : public Error {
public:
  using Error::Error;
};

// Wraps a failure inside one pipeline stage so the diagnostic can name it.
class PipelineError : public Error {
public:
  PipelineError(std::string stage, const std::string& what)
      : Error("stage '" + stage + "': " + what), stage_(std::move(stage)) {}

  const std::string& stage() const noexcept { return stage_; }

private:
  std::string stage_;
};

}  // namespace avsal
