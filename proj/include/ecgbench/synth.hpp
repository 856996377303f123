#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ecgbench/signal.hpp"

namespace ecgbench::synth {

enum Wave { kP = 0, kQ, kR, kS, kT };

// Gaussian bump; width is the standard deviation.
struct Bump {
  double amplitude_mv = 0.0;
  double width_ms = 0.0;
  double offset_ms = 0.0;  // centre relative to R
};

struct SubjectParams {
  std::array<Bump, 5> waves;  // P, Q, R, S, T
  double heart_rate_bpm = 70.0;
  double hrv_ms = 30.0;           // SD of RR
  double drift_offset = 0.0;      // per-day relative SD of wave offsets
  double drift_amplitude = 0.0;   // per-day relative SD of amplitudes
  std::uint64_t seed = 0;

  double qs_span_ms() const { return waves[kS].offset_ms - waves[kQ].offset_ms; }
};

SubjectParams generate_subject(std::uint64_t seed);

struct NoiseModel {
  std::optional<double> snr_db;  // broadband white noise; nullopt = none
  double powerline_mv = 0.05;
  double powerline_hz = 50.0;
  double wander_mv = 0.1;
  double wander_hz = 0.3;

  static NoiseModel none() { return {std::nullopt, 0.0, 50.0, 0.0, 0.3}; }
};

// Tracker-off gaps placed at random, without overlap.
struct GapModel {
  int count = 0;  // per recording
  double length_s = 30.0;
};

struct FieldWeekConfig {
  int n_subjects = 20;
  int n_days = 7;
  double day_duration_s = 600.0;  // first and last day get half
  GapModel gaps;
  NoiseModel noise;
  int sample_rate = 1024;
  double drift_scale = 1.0;  // 0 disables day drift
  double jitter_ms = 2.0;    // per-beat offset jitter
  std::uint64_t seed = 0;
};

double day_duration(const FieldWeekConfig& config, int day);
std::string subject_name(int index);  // "S01", ...
// Subject parameters seeded from (master seed, subject index).
std::vector<SubjectParams> corpus_subjects(const FieldWeekConfig& config);

struct BeatTruth {
  Eigen::Index p = 0, q = 0, r = 0, s = 0, t = 0;
};

struct GroundTruth {
  std::vector<BeatTruth> beats;  // only beats whose R sample is valid
  ValidityMask validity;
};

struct SynthRecording {
  EcgRecording recording;
  GroundTruth truth;
};

// Wave parameters for one day after drift.
SubjectParams apply_day_drift(const SubjectParams& params, int day, double drift_scale);

// Beat timing and morphology come from the subject seed and day; noise and
// gaps from a separate stream selected by `noise_stream`, so two subjects with
// equal params but different streams are "twins".
SynthRecording generate_recording(const SubjectParams& params, int day,
                                  const FieldWeekConfig& config,
                                  std::uint64_t noise_stream = 0);

struct ManifestEntry {
  std::string edf;    // relative to the manifest directory
  std::string truth;
  std::string subject;
  int day = 0;
  int sample_rate = 0;
  Eigen::Index samples = 0;
};

struct Manifest {
  std::filesystem::path root;
  std::vector<ManifestEntry> entries;
};

// In memory, subject-major then day order.
std::vector<SynthRecording> generate_corpus(const FieldWeekConfig& config, std::size_t jobs = 1);

// EDF + truth CSV per recording, plus manifest.csv in `out_dir`.
Manifest generate_field_week(const FieldWeekConfig& config, const std::filesystem::path& out_dir,
                             std::size_t jobs = 1);

void write_truth_csv(std::ostream& out, const GroundTruth& truth);
void write_manifest_csv(std::ostream& out, const Manifest& manifest);
Manifest read_manifest(const std::filesystem::path& path);

}  // namespace ecgbench::synth
