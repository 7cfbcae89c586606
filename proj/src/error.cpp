#include "hfc/error.hpp"

namespace hfc {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid-argument";
    case ErrorKind::InvalidL: return "invalid-L";
    case ErrorKind::InvalidR: return "invalid-r";
    case ErrorKind::DimensionMismatch: return "dimension-mismatch";
    case ErrorKind::SingularComposition: return "singular-composition";
    case ErrorKind::NonConvergent: return "non-convergent";
    case ErrorKind::TooManySlots: return "too-many-slots";
    case ErrorKind::NoCrossing: return "no-crossing";
    case ErrorKind::InsufficientData: return "insufficient-data";
    case ErrorKind::SeriesTooShort: return "series-too-short";
    case ErrorKind::ParseError: return "parse-error";
    case ErrorKind::ValidationError: return "validation-error";
    case ErrorKind::Io: return "io-error";
    case ErrorKind::FlaggedSamples: return "flagged-samples";
  }
  return "unknown";
}

}  // namespace hfc
