#include "ecgbench/signal.hpp"

#include <cmath>

#include "ecgbench/error.hpp"

namespace ecgbench {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMalformedHeader: return "MalformedHeader";
    case ErrorCode::kUnsupportedFeature: return "UnsupportedFeature";
    case ErrorCode::kTruncatedPayload: return "TruncatedPayload";
    case ErrorCode::kAmplitudeOverflow: return "AmplitudeOverflow";
    case ErrorCode::kEmptyRecording: return "EmptyRecording";
    case ErrorCode::kInvalidBand: return "InvalidBand";
    case ErrorCode::kEvenTaps: return "EvenTaps";
    case ErrorCode::kSignalTooShort: return "SignalTooShort";
    case ErrorCode::kNonIntegerFactor: return "NonIntegerFactor";
    case ErrorCode::kWindowOutOfBounds: return "WindowOutOfBounds";
    case ErrorCode::kIncompleteCycle: return "IncompleteCycle";
    case ErrorCode::kSchemaMismatch: return "SchemaMismatch";
    case ErrorCode::kSingleClass: return "SingleClass";
    case ErrorCode::kNonFiniteFeature: return "NonFiniteFeature";
    case ErrorCode::kEmptySubject: return "EmptySubject";
    case ErrorCode::kInsufficientData: return "InsufficientData";
    case ErrorCode::kMissingDay: return "MissingDay";
    case ErrorCode::kEmptyScores: return "EmptyScores";
    case ErrorCode::kProtocolViolation: return "ProtocolViolation";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kIo: return "IoError";
  }
  return "Unknown";
}

EcgRecording make_recording(Signal samples, int sample_rate,
                            std::string subject_id, int day_index) {
  EcgRecording r;
  r.validity.assign(static_cast<std::size_t>(samples.size()), 1);
  r.samples = std::move(samples);
  r.sample_rate = sample_rate;
  r.subject_id = std::move(subject_id);
  r.day_index = day_index;
  return r;
}

void check_well_formed(const EcgRecording& recording) {
  if (recording.sample_rate <= 0)
    throw Error(ErrorCode::kInvalidArgument, "sample rate must be positive");
  if (static_cast<Eigen::Index>(recording.validity.size()) != recording.size())
    throw Error(ErrorCode::kInvalidArgument,
                "validity mask length differs from sample count");
}

std::vector<Episode> split_clean_episodes(const EcgRecording& recording,
                                          double min_len_s) {
  check_well_formed(recording);
  if (min_len_s < 0)
    throw Error(ErrorCode::kInvalidArgument, "min_len must be >= 0");
  const auto min_samples = static_cast<Eigen::Index>(
      std::ceil(min_len_s * recording.sample_rate));

  std::vector<Episode> episodes;
  const Eigen::Index n = recording.size();
  Eigen::Index i = 0;
  while (i < n) {
    if (!recording.validity[i]) {
      ++i;
      continue;
    }
    Eigen::Index j = i;
    while (j < n && recording.validity[j]) ++j;
    if (j - i >= min_samples && j > i) {
      episodes.push_back({recording.subject_id, recording.day_index, i, j - i,
                          recording.sample_rate});
    }
    i = j;
  }
  return episodes;
}

}  // namespace ecgbench
