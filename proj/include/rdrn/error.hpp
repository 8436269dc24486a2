#pragma once

#include <stdexcept>
#include <string>

namespace rdrn {

// Invalid configuration: bad scale, channel counts, degradation spec, ...
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Tensor shapes that do not line up.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Caller-supplied data that violates an operation's precondition.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CheckpointError : public std::runtime_error {
 public:
  CheckpointError(const std::string& what, std::string tensor = {})
      : std::runtime_error(what), tensor_(std::move(tensor)) {}
  // Name of the first tensor that failed validation, empty if not tensor-specific.
  const std::string& tensor() const noexcept { return tensor_; }

 private:
  std::string tensor_;
};

// Raised when the training objective becomes non-finite.
class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(const std::string& what, long step, std::string dump_path)
      : std::runtime_error(what), step_(step), dump_path_(std::move(dump_path)) {}
  long step() const noexcept { return step_; }
  const std::string& dump_path() const noexcept { return dump_path_; }

 private:
  long step_;
  std::string dump_path_;
};

}  // namespace rdrn
