#include "ecgbench/dsp.hpp"

#include <algorithm>

namespace ecgbench {

namespace {

int resampling_taps(int factor) { return 64 * factor - 1; }

}  // namespace

FirFilterd antialias_filter(int source_fs, int target_fs) {
  const int factor = source_fs / target_fs;
  return design_fir_lowpass(resampling_taps(factor), 0.45 * target_fs, source_fs);
}

EcgRecording downsample(const EcgRecording& recording, int target_fs) {
  check_well_formed(recording);
  if (target_fs <= 0 || recording.sample_rate % target_fs != 0)
    throw Error(ErrorCode::kNonIntegerFactor,
                std::to_string(recording.sample_rate) + " Hz is not a multiple of " +
                    std::to_string(target_fs) + " Hz");
  const int factor = recording.sample_rate / target_fs;
  if (factor == 1) return recording;

  const FirFilterd filter = antialias_filter(recording.sample_rate, target_fs);
  const Eigen::Index n = recording.size();
  const Eigen::Index out_n = n / factor;
  const Eigen::Index taps = filter.taps();
  const Eigen::Index delay = filter.group_delay();
  const auto& c = filter.coefficients;

  EcgRecording out;
  out.sample_rate = target_fs;
  out.subject_id = recording.subject_id;
  out.day_index = recording.day_index;
  out.start_offset = recording.start_offset;
  out.samples.resize(out_n);
  out.validity.assign(static_cast<std::size_t>(out_n), 1);

  // Only the kept outputs are computed.
  for (Eigen::Index m = 0; m < out_n; ++m) {
    const Eigen::Index i = m * factor;
    const Eigen::Index k_lo = std::max<Eigen::Index>(0, i + delay - (n - 1));
    const Eigen::Index k_hi = std::min<Eigen::Index>(taps - 1, i + delay);
    double acc = 0.0;
    for (Eigen::Index k = k_lo; k <= k_hi; ++k) acc += c[k] * recording.samples[i + delay - k];
    out.samples[m] = acc;
    bool valid = true;
    for (int j = 0; j < factor; ++j) valid = valid && recording.validity[i + j];
    out.validity[m] = valid ? 1 : 0;
  }
  return out;
}

Signal upsample(const Signal& signal, int factor) {
  if (factor < 1) throw Error(ErrorCode::kNonIntegerFactor, "factor must be >= 1");
  if (factor == 1) return signal;
  Signal stuffed = Signal::Zero(signal.size() * factor);
  for (Eigen::Index i = 0; i < signal.size(); ++i) stuffed[i * factor] = signal[i] * factor;
  // Normalised design: unit "low" rate, cutoff 0.45 of it.
  const FirFilterd filter =
      design_fir_lowpass(resampling_taps(factor), 0.45, static_cast<double>(factor));
  return apply_fir(stuffed, filter);
}

}  // namespace ecgbench
