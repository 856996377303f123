#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ecgbench/signal.hpp"

namespace ecgbench {

// Strictly increasing R-peak sample indices within one episode.
using RPeakList = std::vector<Eigen::Index>;

struct Fiducial {
  Eigen::Index index = 0;
  double amplitude = 0.0;  // mV
};

struct FiducialPoints {
  std::optional<Fiducial> p;
  std::optional<Fiducial> q;
  Fiducial r;
  std::optional<Fiducial> s;
  std::optional<Fiducial> t;
};

// Peak-to-peak durations in milliseconds.
struct IntervalSet {
  std::optional<double> pq, qr, rs, qs, st, rr;
};

enum class IntervalKind { kPQ = 0, kQR, kRS, kQS, kST };
inline constexpr std::array<IntervalKind, 5> kOutlierIntervals = {
    IntervalKind::kPQ, IntervalKind::kQR, IntervalKind::kRS, IntervalKind::kQS,
    IntervalKind::kST};

std::optional<double> interval(const IntervalSet& set, IntervalKind kind);
std::string_view interval_name(IntervalKind kind);

struct CardiacCycle {
  int episode = 0;
  Eigen::Index window_start = 0;  // inclusive
  Eigen::Index window_end = 0;    // exclusive
  FiducialPoints points;
  IntervalSet intervals;
  bool complete = false;  // all five peaks found
};

struct DetectorConfig {
  double threshold_fraction = 0.48;  // of the smoothed-derivative maximum
  double block_s = 0.75;             // threshold update period
  double lookahead_s = 1.75;         // window the maximum is taken over
  double search_ms = 25.0;           // R search half-width around a crossing
  double refractory_ms = 200.0;
  Eigen::Index edge_margin = 0;      // samples ignored at both ends (filter warm-up)
};

// Engelse-Zeelenberg detector with Lourenco's block-adaptive threshold:
// y1[n] = x[n] - x[n - 4 fs/256], y2 = (1,4,6,4,1) smoothing of y1 with taps
// spaced fs/256 apart, upward crossings of the threshold mark QRS onsets and
// the R peak is the maximum of x within +-search_ms of the crossing.
RPeakList detect_r_peaks(const Eigen::Ref<const Signal>& samples, int fs,
                         const DetectorConfig& config = {});

struct DelineationConfig {
  double before_ms = 200.0;      // cycle window start and P search start
  double after_ms = 400.0;       // cycle window end and T search end
  double qrs_ms = 80.0;          // Q/S search half-width
  double min_prominence = 0.05;  // mV over the search-window median
};

// Locates P, Q, S, T around a detected R. Throws kWindowOutOfBounds when the
// cycle window does not fit inside the signal. `previous_r` fills the RR
// interval when given.
CardiacCycle delineate_cycle(const Eigen::Ref<const Signal>& samples, Eigen::Index r_index,
                             int fs, std::optional<Eigen::Index> previous_r = std::nullopt,
                             const DelineationConfig& config = {});

IntervalSet compute_intervals(const FiducialPoints& points, int fs,
                              std::optional<Eigen::Index> previous_r = std::nullopt);

struct IntervalStats {
  std::array<double, 5> mean{};
  std::array<double, 5> sd{};  // population SD
  std::array<std::size_t, 5> count{};
};

struct OutlierResult {
  std::vector<std::vector<CardiacCycle>> runs;  // clean consecutive stretches
  std::size_t removed = 0;
  IntervalStats stats;  // statistics the decisions were made with
};

IntervalStats interval_stats(std::span<const CardiacCycle> cycles);

// True when the cycle is missing an interval or one of its intervals lies more
// than `sigma` SDs from the type mean.
bool is_outlier(const CardiacCycle& cycle, const IntervalStats& stats, double sigma = 3.0);

// Removes outlier cycles of one episode and splits the stream at each of them.
OutlierResult remove_outliers(std::span<const CardiacCycle> cycles, double sigma = 3.0);

struct CycleRow {
  std::string subject;
  int day = 0;
  int episode = 0;
  CardiacCycle cycle;
};

void write_cycles_csv(std::ostream& out, std::span<const CycleRow> rows);

}  // namespace ecgbench
