#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ecgbench/features.hpp"
#include "ecgbench/segmentation.hpp"
#include "ecgbench/signal.hpp"

namespace ecgbench {

// Preprocessing chain from a raw recording to window features.
struct PipelineConfig {
  int target_fs = 256;
  int filter_taps = 77;
  double band_low_hz = 3.0;
  double band_high_hz = 45.0;
  double min_episode_s = 10.0;
  double outlier_sigma = 3.0;
  int window_stride = 1;
  DetectorConfig detector;
  DelineationConfig delineation;
};

struct ProcessStats {
  std::size_t samples = 0;
  std::size_t invalid_samples = 0;
  std::size_t episodes = 0;
  std::size_t beats = 0;
  std::size_t cycles = 0;  // beats with a full cycle window
  std::size_t outliers = 0;
  std::size_t runs = 0;
  std::size_t windows = 0;
};

struct ProcessResult {
  std::vector<FeatureVector> windows;  // full schema
  std::vector<CycleRow> cycles;        // kept cycles
  ProcessStats stats;
};

// downsample -> clean episodes -> band-pass -> R peaks -> delineation ->
// outlier removal -> 3-beat windows. Window times are seconds from day start.
ProcessResult process_recording(const EcgRecording& recording, const PipelineConfig& config = {});

}  // namespace ecgbench
