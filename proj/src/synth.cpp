#include "ecgbench/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "ecgbench/edf.hpp"
#include "ecgbench/error.hpp"
#include "ecgbench/parallel.hpp"
#include "ecgbench/random.hpp"

namespace ecgbench::synth {

namespace {

constexpr double kStartOffsetS = 8 * 3600.0;

double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// Normal truncated at +-3 SD by redrawing.
double truncated_normal(Rng& rng, double mean, double sd) {
  std::normal_distribution<double> n(0.0, 1.0);
  for (;;) {
    const double z = n(rng);
    if (std::abs(z) <= 3.0) return mean + sd * z;
  }
}

void add_bump(Signal& x, double centre, double amplitude, double sigma) {
  const auto lo = std::max<Eigen::Index>(0, static_cast<Eigen::Index>(std::floor(centre - 5 * sigma)));
  const auto hi = std::min<Eigen::Index>(x.size() - 1,
                                         static_cast<Eigen::Index>(std::ceil(centre + 5 * sigma)));
  const double inv = 1.0 / (2.0 * sigma * sigma);
  for (Eigen::Index i = lo; i <= hi; ++i) {
    const double d = static_cast<double>(i) - centre;
    x[i] += amplitude * std::exp(-d * d * inv);
  }
}

}  // namespace

SubjectParams generate_subject(std::uint64_t seed) {
  Rng rng(derive_seed(seed, {0x5b}));
  SubjectParams p;
  p.seed = seed;
  p.waves[kR] = {uniform(rng, 0.8, 1.6), uniform(rng, 8, 12), 0.0};
  p.waves[kQ] = {-uniform(rng, 0.1, 0.3), uniform(rng, 6, 10), -uniform(rng, 25, 45)};
  p.waves[kS] = {-uniform(rng, 0.2, 0.5), uniform(rng, 6, 10), uniform(rng, 25, 50)};
  p.waves[kP] = {uniform(rng, 0.1, 0.25), uniform(rng, 15, 25), -uniform(rng, 120, 170)};
  p.waves[kT] = {uniform(rng, 0.2, 0.5), uniform(rng, 30, 50), uniform(rng, 200, 300)};
  p.heart_rate_bpm = uniform(rng, 55, 90);
  p.hrv_ms = uniform(rng, 20, 50);
  p.drift_offset = uniform(rng, 0.06, 0.12);
  p.drift_amplitude = uniform(rng, 0.05, 0.1);
  return p;
}

double day_duration(const FieldWeekConfig& config, int day) {
  return (day == 1 || day == config.n_days) ? config.day_duration_s / 2 : config.day_duration_s;
}

std::string subject_name(int index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "S%02d", index + 1);
  return buf;
}

std::vector<SubjectParams> corpus_subjects(const FieldWeekConfig& config) {
  std::vector<SubjectParams> out;
  for (int s = 0; s < config.n_subjects; ++s)
    out.push_back(generate_subject(derive_seed(config.seed, {static_cast<std::uint64_t>(s)})));
  return out;
}

SubjectParams apply_day_drift(const SubjectParams& params, int day, double drift_scale) {
  SubjectParams out = params;
  if (drift_scale <= 0) return out;
  Rng rng(derive_seed(params.seed, {static_cast<std::uint64_t>(day), 0xd1f7}));
  std::normal_distribution<double> n(0.0, 1.0);
  for (int w = 0; w < 5; ++w) {
    auto& b = out.waves[w];
    const double zo = std::clamp(n(rng), -3.0, 3.0);
    const double za = std::clamp(n(rng), -3.0, 3.0);
    if (w != kR) b.offset_ms *= 1.0 + drift_scale * params.drift_offset * zo;
    b.amplitude_mv *= 1.0 + drift_scale * params.drift_amplitude * za;
  }
  // Keep P < Q < 0 < S < T.
  out.waves[kQ].offset_ms = std::min(out.waves[kQ].offset_ms, -5.0);
  out.waves[kS].offset_ms = std::max(out.waves[kS].offset_ms, 5.0);
  out.waves[kP].offset_ms = std::min(out.waves[kP].offset_ms, out.waves[kQ].offset_ms - 20.0);
  out.waves[kT].offset_ms = std::max(out.waves[kT].offset_ms, out.waves[kS].offset_ms + 20.0);
  return out;
}

SynthRecording generate_recording(const SubjectParams& params, int day,
                                  const FieldWeekConfig& config, std::uint64_t noise_stream) {
  if (config.sample_rate <= 0 || !(config.day_duration_s > 0))
    throw Error(ErrorCode::kInvalidArgument, "sample rate and duration must be positive");
  if (config.noise.snr_db && !std::isfinite(*config.noise.snr_db))
    throw Error(ErrorCode::kInvalidArgument, "SNR must be finite");
  const double fs = config.sample_rate;
  const auto n = static_cast<Eigen::Index>(std::llround(day_duration(config, day) * fs));
  const SubjectParams dp = apply_day_drift(params, day, config.drift_scale);
  const double ms = fs / 1000.0;

  SynthRecording out;
  Signal x = Signal::Zero(n);
  Rng beat_rng(derive_seed(params.seed, {static_cast<std::uint64_t>(day), 1}));
  std::normal_distribution<double> jitter(0.0, config.jitter_ms);
  const double rr_mean = 60000.0 / dp.heart_rate_bpm;
  double t_r = uniform(beat_rng, 300.0, 1000.0);  // ms
  std::vector<BeatTruth> beats;
  while (t_r * ms < static_cast<double>(n)) {
    const auto r = static_cast<Eigen::Index>(std::llround(t_r * ms));
    BeatTruth bt;
    bt.r = r;
    std::array<Eigen::Index*, 5> slots = {&bt.p, &bt.q, &bt.r, &bt.s, &bt.t};
    for (int w = 0; w < 5; ++w) {
      const auto& b = dp.waves[w];
      const double offset = w == kR ? 0.0 : b.offset_ms + jitter(beat_rng);
      const double centre = static_cast<double>(r) + offset * ms;
      add_bump(x, centre, b.amplitude_mv, b.width_ms * ms);
      if (w != kR) *slots[w] = static_cast<Eigen::Index>(std::llround(centre));
    }
    beats.push_back(bt);
    t_r += truncated_normal(beat_rng, rr_mean, dp.hrv_ms);
  }

  Rng noise_rng(derive_seed(params.seed, {static_cast<std::uint64_t>(day), 2, noise_stream}));
  const auto& nm = config.noise;
  if (nm.snr_db) {
    const double p_clean = x.squaredNorm() / std::max<double>(1.0, static_cast<double>(n));
    const double sd = std::sqrt(p_clean / std::pow(10.0, *nm.snr_db / 10.0));
    std::normal_distribution<double> white(0.0, sd);
    for (Eigen::Index i = 0; i < n; ++i) x[i] += white(noise_rng);
  }
  if (nm.powerline_mv != 0.0 || nm.wander_mv != 0.0) {
    const double phase_pl = uniform(noise_rng, 0.0, 2 * std::numbers::pi);
    const double phase_bw = uniform(noise_rng, 0.0, 2 * std::numbers::pi);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / fs;
      x[i] += nm.powerline_mv * std::sin(2 * std::numbers::pi * nm.powerline_hz * t + phase_pl) +
              nm.wander_mv * std::sin(2 * std::numbers::pi * nm.wander_hz * t + phase_bw);
    }
  }

  ValidityMask valid(static_cast<std::size_t>(n), 1);
  if (config.gaps.count > 0) {
    Rng gap_rng(derive_seed(params.seed, {static_cast<std::uint64_t>(day), 3, noise_stream}));
    const auto len = static_cast<Eigen::Index>(std::llround(config.gaps.length_s * fs));
    std::vector<std::pair<Eigen::Index, Eigen::Index>> placed;
    for (int attempt = 0; attempt < 100 * config.gaps.count &&
                          static_cast<int>(placed.size()) < config.gaps.count;
         ++attempt) {
      if (len <= 0 || len >= n) break;
      const auto start = std::uniform_int_distribution<Eigen::Index>(0, n - len)(gap_rng);
      const bool overlaps = std::any_of(placed.begin(), placed.end(), [&](const auto& g) {
        return start < g.second && g.first < start + len;
      });
      if (!overlaps) placed.emplace_back(start, start + len);
    }
    for (const auto& [a, b] : placed)
      for (Eigen::Index i = a; i < b; ++i) {
        x[i] = 0.0;
        valid[static_cast<std::size_t>(i)] = 0;
      }
  }

  for (const auto& bt : beats)
    if (valid[static_cast<std::size_t>(bt.r)]) out.truth.beats.push_back(bt);
  out.truth.validity = valid;
  out.recording.samples = std::move(x);
  out.recording.sample_rate = config.sample_rate;
  out.recording.day_index = day;
  out.recording.start_offset = kStartOffsetS;
  out.recording.validity = std::move(valid);
  return out;
}

std::vector<SynthRecording> generate_corpus(const FieldWeekConfig& config, std::size_t jobs) {
  const auto subjects = corpus_subjects(config);
  std::vector<SynthRecording> out(subjects.size() * static_cast<std::size_t>(config.n_days));
  parallel_for(out.size(), jobs, [&](std::size_t i) {
    const std::size_t s = i / static_cast<std::size_t>(config.n_days);
    const int day = static_cast<int>(i % static_cast<std::size_t>(config.n_days)) + 1;
    out[i] = generate_recording(subjects[s], day, config);
    out[i].recording.subject_id = subject_name(static_cast<int>(s));
  });
  return out;
}

void write_truth_csv(std::ostream& out, const GroundTruth& truth) {
  out << "beat,p,q,r,s,t\n";
  for (std::size_t i = 0; i < truth.beats.size(); ++i) {
    const auto& b = truth.beats[i];
    out << i << ',' << b.p << ',' << b.q << ',' << b.r << ',' << b.s << ',' << b.t << '\n';
  }
}

void write_manifest_csv(std::ostream& out, const Manifest& manifest) {
  out << "edf,truth,subject,day,sample_rate,samples\n";
  for (const auto& e : manifest.entries)
    out << e.edf << ',' << e.truth << ',' << e.subject << ',' << e.day << ',' << e.sample_rate
        << ',' << e.samples << '\n';
}

Manifest generate_field_week(const FieldWeekConfig& config, const std::filesystem::path& out_dir,
                             std::size_t jobs) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + out_dir.string() + ": " + ec.message());
  const auto subjects = corpus_subjects(config);
  Manifest manifest;
  manifest.root = out_dir;
  manifest.entries.resize(subjects.size() * static_cast<std::size_t>(config.n_days));
  parallel_for(manifest.entries.size(), jobs, [&](std::size_t i) {
    const std::size_t s = i / static_cast<std::size_t>(config.n_days);
    const int day = static_cast<int>(i % static_cast<std::size_t>(config.n_days)) + 1;
    SynthRecording rec = generate_recording(subjects[s], day, config);
    rec.recording.subject_id = subject_name(static_cast<int>(s));
    const std::string stem = rec.recording.subject_id + "_day" + std::to_string(day);
    edf::write_edf_file(out_dir / (stem + ".edf"), rec.recording);
    std::ofstream truth(out_dir / (stem + "_truth.csv"), std::ios::binary);
    if (!truth) throw Error(ErrorCode::kIo, "cannot write truth file for " + stem);
    write_truth_csv(truth, rec.truth);
    manifest.entries[i] = {stem + ".edf", stem + "_truth.csv", rec.recording.subject_id, day,
                           config.sample_rate, rec.recording.size()};
  });
  std::ofstream out(out_dir / "manifest.csv", std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write manifest in " + out_dir.string());
  write_manifest_csv(out, manifest);
  return manifest;
}

Manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open manifest " + path.string());
  Manifest m;
  m.root = path.parent_path();
  std::string line;
  std::getline(in, line);
  if (line.rfind("edf,truth,subject,day", 0) != 0)
    throw Error(ErrorCode::kInvalidArgument, "not a corpus manifest: " + path.string());
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    ManifestEntry e;
    std::string day, fs, samples;
    std::getline(ss, e.edf, ',');
    std::getline(ss, e.truth, ',');
    std::getline(ss, e.subject, ',');
    std::getline(ss, day, ',');
    std::getline(ss, fs, ',');
    std::getline(ss, samples, ',');
    try {
      e.day = std::stoi(day);
      e.sample_rate = std::stoi(fs);
      e.samples = std::stol(samples);
    } catch (const std::exception&) {
      throw Error(ErrorCode::kInvalidArgument, "bad manifest row: " + line);
    }
    m.entries.push_back(std::move(e));
  }
  return m;
}

}  // namespace ecgbench::synth
