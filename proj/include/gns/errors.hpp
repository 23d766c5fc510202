#pragma once

#include <stdexcept>
#include <string>

namespace gns {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// An index (row, edge endpoint, type id) is out of range.
class IndexError : public Error {
 public:
  using Error::Error;
};

/// A documented precondition was violated by the caller.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Metadata or configuration text could not be parsed.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Malformed zip / npy container.
class CodecError : public Error {
 public:
  using Error::Error;
};

/// A file could not be opened, written or renamed.
class IoError : public Error {
 public:
  using Error::Error;
};

/// A generator or training configuration is not physical or not usable.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// The learned model produced a non-finite state during rollout.
class RolloutError : public Error {
 public:
  RolloutError(const std::string& what, std::size_t step) : Error(what), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

/// Checkpoint file is corrupt, truncated, or from another format version.
class CheckpointError : public Error {
 public:
  using Error::Error;
};

}  // namespace gns
