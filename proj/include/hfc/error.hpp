#pragma once

#include <stdexcept>
#include <string>

namespace hfc {

enum class ErrorKind {
  InvalidArgument,
  InvalidL,
  InvalidR,
  DimensionMismatch,
  SingularComposition,
  NonConvergent,
  TooManySlots,
  NoCrossing,
  InsufficientData,
  SeriesTooShort,
  ParseError,
  ValidationError,
  Io,
  FlaggedSamples,
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace hfc
