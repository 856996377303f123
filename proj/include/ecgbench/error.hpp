#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ecgbench {

enum class ErrorCode {
  kMalformedHeader,
  kUnsupportedFeature,
  kTruncatedPayload,
  kAmplitudeOverflow,
  kEmptyRecording,
  kInvalidBand,
  kEvenTaps,
  kSignalTooShort,
  kNonIntegerFactor,
  kWindowOutOfBounds,
  kIncompleteCycle,
  kSchemaMismatch,
  kSingleClass,
  kNonFiniteFeature,
  kEmptySubject,
  kInsufficientData,
  kMissingDay,
  kEmptyScores,
  kProtocolViolation,
  kInvalidArgument,
  kIo,
};

std::string_view to_string(ErrorCode code);

// All library failures surface as this exception; `code()` identifies the
// failure class so callers can decide whether to skip or abort.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace ecgbench
