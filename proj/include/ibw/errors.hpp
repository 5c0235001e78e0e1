#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ibw {

// Shapes that do not line up (matmul extents, layer chains, batch widths).
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Argument outside the mathematical domain of a formula.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Bad caller data: labels out of range, empty datasets.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed file. offset is the byte position where parsing gave up.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class UnsupportedVersion : public FormatError {
 public:
  UnsupportedVersion(int version, std::size_t offset)
      : FormatError("unsupported checkpoint version " + std::to_string(version), offset),
        version_(version) {}
  int version() const noexcept { return version_; }

 private:
  int version_;
};

// A loss or parameter became non-finite during training.
class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ibw
