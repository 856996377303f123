#include <doctest.h>
#include <random>


#include <cmath>
#include <complex>
#include <numbers>

#include "ecgbench/dsp.hpp"
#include "ecgbench/error.hpp"

using namespace ecgbench;

namespace {

// |sum_n h[n] e^{-j w n}| evaluated directly.
double dft_gain(const Eigen::VectorXd& h, double f, double fs) {
  std::complex<double> acc = 0;
  for (Eigen::Index n = 0; n < h.size(); ++n)
    acc += h[n] * std::polar(1.0, -2 * std::numbers::pi * f / fs * static_cast<double>(n));
  return std::abs(acc);
}

Signal sine(double f, double fs, Eigen::Index n, double amp = 1.0) {
  Signal s(n);
  for (Eigen::Index i = 0; i < n; ++i) s[i] = amp * std::sin(2 * std::numbers::pi * f * i / fs);
  return s;
}

double rms(const Eigen::Ref<const Signal>& x) { return std::sqrt(x.squaredNorm() / x.size()); }

}  // namespace

TEST_CASE("77-tap band-pass response") {
  const auto f = design_fir_bandpass<double>(77, 3, 45, 256);
  CHECK(f.taps() == 77);
  CHECK(f.group_delay() == 38);
  CHECK(std::abs(f.coefficients.sum()) <= 0.01);
  CHECK(dft_gain(f.coefficients, 20, 256) >= 0.95);
  CHECK(dft_gain(f.coefficients, 20, 256) <= 1.05);
  CHECK(gain_at(f, 20) == doctest::Approx(dft_gain(f.coefficients, 20, 256)).epsilon(1e-12));
  for (Eigen::Index i = 0; i < f.taps(); ++i)
    CHECK(f.coefficients[i] == f.coefficients[f.taps() - 1 - i]);
}

TEST_CASE("band-pass passes 10 Hz and blocks 50 Hz") {
  const auto f = design_fir_bandpass<double>(77, 3, 45, 256);
  const Eigen::Index n = 256 * 8;
  const Signal y50 = apply_fir(sine(50, 256, n), f);
  const Signal y10 = apply_fir(sine(10, 256, n), f);
  // skip edges where zero padding matters
  const Eigen::Index m = 100;
  const double in_rms = rms(sine(50, 256, n).segment(m, n - 2 * m));
  CHECK(rms(y50.segment(m, n - 2 * m)) <= 0.2 * in_rms);
  const double r10 = rms(y10.segment(m, n - 2 * m)) / rms(sine(10, 256, n).segment(m, n - 2 * m));
  CHECK(r10 >= 0.9);
  CHECK(r10 <= 1.1);
  CHECK(r10 == doctest::Approx(dft_gain(f.coefficients, 10, 256)).epsilon(0.01));
}

TEST_CASE("design errors") {
  try {
    design_fir_bandpass<double>(76, 3, 45, 256);
    FAIL("expected");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kEvenTaps);
  }
  try {
    design_fir_bandpass<double>(77, 45, 3, 256);
    FAIL("expected");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInvalidBand);
  }
  CHECK_THROWS_AS(design_fir_bandpass<double>(77, 3, 130, 256), Error);
}

TEST_CASE("impulse gives the coefficients centred on it") {
  const auto f = design_fir_bandpass<double>(77, 3, 45, 256);
  Signal x = Signal::Zero(300);
  x[150] = 1.0;
  const Signal y = apply_fir(x, f);
  for (Eigen::Index k = 0; k < 77; ++k) CHECK(y[150 - 38 + k] == doctest::Approx(f.coefficients[k]));
  CHECK(y[150 - 39] == 0.0);
  CHECK(y[150 + 39] == 0.0);
}

TEST_CASE("zero in, zero out; linear; DC rejected") {
  const auto f = design_fir_bandpass<double>(77, 3, 45, 256);
  CHECK(apply_fir(Signal::Zero(500), f).isZero());
  std::mt19937 rng(5);
  std::normal_distribution<double> n;
  Signal a(600), b(600);
  for (auto& v : a) v = n(rng);
  for (auto& v : b) v = n(rng);
  const Signal lhs = apply_fir(Signal(a + b), f);
  const Signal rhs = apply_fir(a, f) + apply_fir(b, f);
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-9);
  const Signal shifted = apply_fir(Signal(a.array() + 1.0), f);
  const Signal base = apply_fir(a, f);
  // interior only: padding makes the edges see a step
  CHECK((shifted - base).segment(38, 600 - 76).cwiseAbs().maxCoeff() <= 0.01);
}

TEST_CASE("float instantiation") {
  const auto f = design_fir_bandpass<float>(77, 3, 45, 256);
  Eigen::VectorXf x = Eigen::VectorXf::Zero(200);
  x[100] = 1.0f;
  const Eigen::VectorXf y = apply_fir(x, f);
  CHECK(y[100] == doctest::Approx(f.coefficients[38]));
}

TEST_CASE("too short signal") {
  const auto f = design_fir_bandpass<double>(77, 3, 45, 256);
  try {
    apply_fir(Signal::Zero(50), f);
    FAIL("expected");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kSignalTooShort);
  }
}

TEST_CASE("downsample 1024 to 256") {
  const Eigen::Index n = 1024 * 6;
  auto rec = make_recording(Signal::Constant(n, 0.7), 1024, "S01", 3);
  const auto out = downsample(rec, 256);
  CHECK(out.size() == n / 4);
  CHECK(out.sample_rate == 256);
  CHECK(out.subject_id == "S01");
  // constant preserved away from the padded edges
  CHECK((out.samples.segment(50, out.size() - 100).array() - 0.7).abs().maxCoeff() <= 1e-3);
}

TEST_CASE("downsample keeps 100 Hz and removes 300 Hz") {
  const Eigen::Index n = 1024 * 8;
  const auto r100 = downsample(make_recording(sine(100, 1024, n), 1024), 256);
  const auto r300 = downsample(make_recording(sine(300, 1024, n), 1024), 256);
  const Eigen::Index m = 100, len = r100.size() - 2 * m;
  const Signal ref = sine(100, 256, r100.size());
  CHECK(rms(r100.samples.segment(m, len)) == doctest::Approx(rms(ref.segment(m, len))).epsilon(0.05));
  CHECK(rms(r300.samples.segment(m, len)) <= 0.05 * rms(sine(300, 1024, n)));
}

TEST_CASE("downsample masks and factors") {
  auto rec = make_recording(Signal::Zero(1024), 1024);
  rec.validity[401] = 0;
  const auto out = downsample(rec, 256);
  CHECK(out.validity[100] == 0);
  CHECK(out.validity[99] == 1);
  CHECK(out.validity[101] == 1);
  try {
    downsample(rec, 300);
    FAIL("expected");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kNonIntegerFactor);
  }
}

TEST_CASE("upsample then downsample recovers a slow sine") {
  const Signal x = sine(5, 256, 256 * 4);
  const Signal up = upsample(x, 4);
  CHECK(up.size() == x.size() * 4);
  const auto back = downsample(make_recording(up, 1024), 256);
  const Eigen::Index m = 64;
  CHECK((back.samples - x).segment(m, x.size() - 2 * m).cwiseAbs().maxCoeff() <= 0.02);
}
