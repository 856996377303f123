#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ecgbench/signal.hpp"

namespace ecgbench::edf {

inline constexpr std::size_t kFixedHeaderBytes = 256;
inline constexpr std::size_t kSignalHeaderBytes = 256;
inline constexpr char kAnnotationsLabel[] = "EDF Annotations";
// Annotation text that marks an invalid (gap) stretch of the ECG channel.
inline constexpr char kGapAnnotation[] = "invalid";

struct SignalHeader {
  std::string label;
  std::string transducer;
  std::string physical_dimension;
  double physical_min = -6.0;
  double physical_max = 6.0;
  int digital_min = -32768;
  int digital_max = 32767;
  std::string prefilter;
  int samples_per_record = 0;

  bool is_annotation() const { return label == kAnnotationsLabel; }
};

struct Header {
  std::string version = "0";
  std::string patient_id;
  std::string recording_id;
  std::string start_date = "01.01.00";  // dd.mm.yy
  std::string start_time = "00.00.00";  // hh.mm.ss
  std::string reserved;                 // "EDF+C" for EDF+ continuous files
  long num_records = 0;
  double record_duration = 1.0;  // seconds
  std::vector<SignalHeader> signals;

  std::size_t header_bytes() const {
    return kFixedHeaderBytes + kSignalHeaderBytes * signals.size();
  }
  std::size_t record_bytes() const;
};

// Parsed file; `digital[s]` holds num_records * samples_per_record raw
// 16-bit values for signal s (annotation channels keep their raw bytes in
// little-endian pairs).
struct File {
  Header header;
  std::vector<std::vector<std::int16_t>> digital;
};

using Bytes = std::vector<char>;

File parse(std::span<const char> bytes);
Bytes serialize(const File& file);

struct WriteOptions {
  double physical_min = -6.0;
  double physical_max = 6.0;
};

// Extracts the first ECG-labelled signal (falling back to the first ordinary
// signal) and converts digital values to millivolts. Gap annotations in an
// "EDF Annotations" channel clear the corresponding validity flags.
EcgRecording read_edf(std::span<const char> bytes);

// Single-channel writer with 1 s data records. Recordings whose mask has gaps,
// or whose length is not a whole number of records, get an EDF+ annotation
// channel; padding samples are flagged invalid.
Bytes write_edf(const EcgRecording& recording, const WriteOptions& options = {});

EcgRecording read_edf_file(const std::filesystem::path& path);
void write_edf_file(const std::filesystem::path& path,
                    const EcgRecording& recording,
                    const WriteOptions& options = {});

}  // namespace ecgbench::edf
