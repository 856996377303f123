#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace ecgbench {

using Signal = Eigen::VectorXd;

// Per-sample validity: 1 = the device reported a valid measure and was not
// charging, 0 otherwise.
using ValidityMask = std::vector<std::uint8_t>;

struct EcgRecording {
  Signal samples;            // millivolts
  int sample_rate = 256;     // Hz
  std::string subject_id;
  int day_index = 0;         // study day, 1-based in generated corpora
  double start_offset = 0.;  // seconds from day start
  ValidityMask validity;

  Eigen::Index size() const { return samples.size(); }

  // True for the rates this pipeline is built around (1024 raw, 256 analysed).
  bool has_standard_rate() const {
    return sample_rate == 1024 || sample_rate == 256;
  }
};

// Contiguous valid slice of a recording.
struct Episode {
  std::string subject_id;
  int day_index = 0;
  Eigen::Index start = 0;
  Eigen::Index length = 0;
  int sample_rate = 256;

  Eigen::Index end() const { return start + length; }
};

// Creates a recording with an all-true mask.
EcgRecording make_recording(Signal samples, int sample_rate,
                            std::string subject_id = {}, int day_index = 0);

// Throws kInvalidArgument when the mask length or sample rate is inconsistent.
void check_well_formed(const EcgRecording& recording);

// Maximal runs of valid samples that last at least `min_len_s` seconds, in
// order. Runs shorter than the minimum are dropped.
std::vector<Episode> split_clean_episodes(const EcgRecording& recording,
                                          double min_len_s = 10.0);

// Copies the samples covered by an episode.
inline Signal episode_samples(const EcgRecording& recording,
                              const Episode& episode) {
  return recording.samples.segment(episode.start, episode.length);
}

}  // namespace ecgbench
