#include "ecgbench/pipeline.hpp"

#include <algorithm>
#include <iterator>
#include <optional>

#include "ecgbench/dsp.hpp"
#include "ecgbench/error.hpp"

namespace ecgbench {

ProcessResult process_recording(const EcgRecording& recording, const PipelineConfig& config) {
  check_well_formed(recording);
  ProcessResult out;
  const EcgRecording rec = recording.sample_rate == config.target_fs
                               ? recording
                               : downsample(recording, config.target_fs);
  const int fs = rec.sample_rate;
  out.stats.samples = static_cast<std::size_t>(rec.size());
  out.stats.invalid_samples =
      static_cast<std::size_t>(std::count(rec.validity.begin(), rec.validity.end(), 0));

  const auto filter = design_fir_bandpass<double>(config.filter_taps, config.band_low_hz,
                                                  config.band_high_hz, fs);
  DetectorConfig detector = config.detector;
  detector.edge_margin = std::max(detector.edge_margin, filter.group_delay());

  const auto episodes = split_clean_episodes(rec, config.min_episode_s);
  out.stats.episodes = episodes.size();
  int run_id = 0;
  for (std::size_t e = 0; e < episodes.size(); ++e) {
    const Episode& ep = episodes[e];
    if (ep.length < filter.taps()) continue;
    const Signal x = apply_fir(episode_samples(rec, ep), filter);
    const RPeakList peaks = detect_r_peaks(x, fs, detector);
    out.stats.beats += peaks.size();

    std::vector<CardiacCycle> cycles;
    std::optional<Eigen::Index> previous;
    for (Eigen::Index r : peaks) {
      try {
        CardiacCycle c = delineate_cycle(x, r, fs, previous, config.delineation);
        c.episode = static_cast<int>(e);
        cycles.push_back(std::move(c));
      } catch (const Error& err) {
        if (err.code() != ErrorCode::kWindowOutOfBounds) throw;
      }
      previous = r;
    }
    out.stats.cycles += cycles.size();

    const OutlierResult clean = remove_outliers(cycles, config.outlier_sigma);
    out.stats.outliers += clean.removed;
    for (const auto& run : clean.runs) {
      ++out.stats.runs;
      WindowLabel base;
      base.subject_id = rec.subject_id;
      base.day_index = rec.day_index;
      base.t_start_s = rec.start_offset + static_cast<double>(ep.start) / fs;
      base.run = run_id++;
      auto windows = run_windows(run, config.window_stride, fs, base);
      out.stats.windows += windows.size();
      std::move(windows.begin(), windows.end(), std::back_inserter(out.windows));
      for (const auto& c : run) out.cycles.push_back({rec.subject_id, rec.day_index, c.episode, c});
    }
  }
  return out;
}

}  // namespace ecgbench
