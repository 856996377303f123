#pragma once

#include <cmath>
#include <complex>
#include <numbers>

#include <Eigen/Core>

#include "ecgbench/error.hpp"
#include "ecgbench/signal.hpp"

namespace ecgbench {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// Linear-phase (Type I) FIR filter.
template <typename Scalar>
struct FirFilter {
  VectorX<Scalar> coefficients;
  double cutoff_low = 0.0;   // Hz; 0 for low-pass designs
  double cutoff_high = 0.0;  // Hz
  double sample_rate = 0.0;  // Hz

  Eigen::Index taps() const { return coefficients.size(); }
  Eigen::Index group_delay() const { return (taps() - 1) / 2; }
};

using FirFilterd = FirFilter<double>;

namespace detail {

// Hamming-windowed sinc low-pass with unit DC gain. Coefficients are mirrored
// from the first half so symmetry is exact.
template <typename Scalar>
VectorX<Scalar> windowed_sinc_lowpass(int taps, double cutoff, double fs) {
  const int mid = (taps - 1) / 2;
  const double fc = cutoff / fs;
  VectorX<double> h(taps);
  for (int n = 0; n <= mid; ++n) {
    const double m = n - mid;
    const double sinc = m == 0 ? 2.0 * fc
                               : std::sin(2.0 * std::numbers::pi * fc * m) /
                                     (std::numbers::pi * m);
    const double window =
        0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * n / (taps - 1));
    h[n] = h[taps - 1 - n] = sinc * window;
  }
  h /= h.sum();
  return h.template cast<Scalar>();
}

inline void check_taps(int taps) {
  if (taps < 3) throw Error(ErrorCode::kInvalidArgument, "need at least 3 taps");
  if (taps % 2 == 0)
    throw Error(ErrorCode::kEvenTaps, "tap count must be odd, got " + std::to_string(taps));
}

}  // namespace detail

template <typename Scalar = double>
FirFilter<Scalar> design_fir_lowpass(int taps, double cutoff, double fs) {
  detail::check_taps(taps);
  if (!(cutoff > 0 && cutoff < fs / 2))
    throw Error(ErrorCode::kInvalidBand, "low-pass cutoff must lie in (0, fs/2)");
  return {detail::windowed_sinc_lowpass<Scalar>(taps, cutoff, fs), 0.0, cutoff, fs};
}

// Band-pass as the difference of two unit-DC low-passes, so the DC gain is
// zero up to rounding.
template <typename Scalar = double>
FirFilter<Scalar> design_fir_bandpass(int taps, double lo, double hi, double fs) {
  detail::check_taps(taps);
  if (!(lo > 0 && lo < hi && hi < fs / 2))
    throw Error(ErrorCode::kInvalidBand, "band must satisfy 0 < lo < hi < fs/2");
  VectorX<Scalar> c = detail::windowed_sinc_lowpass<Scalar>(taps, hi, fs) -
                      detail::windowed_sinc_lowpass<Scalar>(taps, lo, fs);
  return {std::move(c), lo, hi, fs};
}

// H(f) = sum_k c[k] exp(-j 2 pi f k / fs).
template <typename Scalar>
std::complex<double> frequency_response(const FirFilter<Scalar>& filter, double freq_hz) {
  std::complex<double> acc = 0.0;
  const double w = 2.0 * std::numbers::pi * freq_hz / filter.sample_rate;
  for (Eigen::Index k = 0; k < filter.taps(); ++k)
    acc += static_cast<double>(filter.coefficients[k]) * std::polar(1.0, -w * k);
  return acc;
}

template <typename Scalar>
double gain_at(const FirFilter<Scalar>& filter, double freq_hz) {
  return std::abs(frequency_response(filter, freq_hz));
}

// Same-length convolution with zero padding, shifted by the group delay so
// events keep their sample positions.
template <typename Derived>
VectorX<typename Derived::Scalar> apply_fir(
    const Eigen::MatrixBase<Derived>& signal,
    const FirFilter<typename Derived::Scalar>& filter) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = signal.size();
  const Eigen::Index taps = filter.taps();
  if (n < taps)
    throw Error(ErrorCode::kSignalTooShort,
                "signal of " + std::to_string(n) + " samples is shorter than " +
                    std::to_string(taps) + " taps");
  const Eigen::Index delay = filter.group_delay();
  const auto& c = filter.coefficients;
  VectorX<Scalar> out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    // out[i] = sum_k c[k] * x[i + delay - k]
    const Eigen::Index k_lo = std::max<Eigen::Index>(0, i + delay - (n - 1));
    const Eigen::Index k_hi = std::min<Eigen::Index>(taps - 1, i + delay);
    Scalar acc = 0;
    for (Eigen::Index k = k_lo; k <= k_hi; ++k) acc += c[k] * signal[i + delay - k];
    out[i] = acc;
  }
  return out;
}

// Anti-alias filter used by `downsample`: cutoff at 0.45 x target rate.
FirFilterd antialias_filter(int source_fs, int target_fs);

// Low-pass then keep every (fs / target_fs)-th sample. The validity mask is
// decimated with AND over each group.
EcgRecording downsample(const EcgRecording& recording, int target_fs);

// Zero-stuffing interpolation by an integer factor (inverse of downsample for
// band-limited content).
Signal upsample(const Signal& signal, int factor);

}  // namespace ecgbench
