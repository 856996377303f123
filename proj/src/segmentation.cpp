#include "ecgbench/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "ecgbench/error.hpp"

namespace ecgbench {

namespace {

Eigen::Index ms_to_samples(double ms, int fs) {
  return static_cast<Eigen::Index>(std::lround(ms * fs / 1000.0));
}

double median_of(const Eigen::Ref<const Signal>& x, Eigen::Index begin, Eigen::Index end) {
  std::vector<double> v(x.data() + begin, x.data() + end);
  const auto mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) {
    m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + mid));
  }
  return m;
}

// Extremum in [begin, end); `sign` +1 for maxima, -1 for minima.
std::optional<Fiducial> find_wave(const Eigen::Ref<const Signal>& x, Eigen::Index begin,
                                  Eigen::Index end, int sign, double min_prominence) {
  if (end <= begin) return std::nullopt;
  Eigen::Index best = begin;
  for (Eigen::Index i = begin + 1; i < end; ++i)
    if (sign * x[i] > sign * x[best]) best = i;
  const double prominence = sign * (x[best] - median_of(x, begin, end));
  if (prominence < min_prominence) return std::nullopt;
  return Fiducial{best, x[best]};
}

}  // namespace

std::optional<double> interval(const IntervalSet& set, IntervalKind kind) {
  switch (kind) {
    case IntervalKind::kPQ: return set.pq;
    case IntervalKind::kQR: return set.qr;
    case IntervalKind::kRS: return set.rs;
    case IntervalKind::kQS: return set.qs;
    case IntervalKind::kST: return set.st;
  }
  return std::nullopt;
}

std::string_view interval_name(IntervalKind kind) {
  switch (kind) {
    case IntervalKind::kPQ: return "PQ";
    case IntervalKind::kQR: return "QR";
    case IntervalKind::kRS: return "RS";
    case IntervalKind::kQS: return "QS";
    case IntervalKind::kST: return "ST";
  }
  return "?";
}

RPeakList detect_r_peaks(const Eigen::Ref<const Signal>& x, int fs,
                         const DetectorConfig& config) {
  const Eigen::Index n = x.size();
  const Eigen::Index step = std::max<Eigen::Index>(1, std::lround(fs / 256.0));
  const Eigen::Index lag = 4 * step;
  RPeakList peaks;
  if (n <= lag + 4 * step) return peaks;

  // Differentiator and (1,4,6,4,1) smoother.
  Signal y1 = Signal::Zero(n);
  for (Eigen::Index i = lag; i < n; ++i) y1[i] = x[i] - x[i - lag];
  static constexpr double kSmooth[5] = {1, 4, 6, 4, 1};
  Signal y2 = Signal::Zero(n);
  for (Eigen::Index i = 4 * step; i < n; ++i) {
    double acc = 0.0;
    for (int k = 0; k < 5; ++k) acc += kSmooth[k] * y1[i - k * step];
    y2[i] = acc;
  }

  const Eigen::Index block = std::max<Eigen::Index>(1, std::lround(config.block_s * fs));
  const Eigen::Index lookahead = std::max<Eigen::Index>(1, std::lround(config.lookahead_s * fs));
  const Eigen::Index search = ms_to_samples(config.search_ms, fs);
  const Eigen::Index refractory = ms_to_samples(config.refractory_ms, fs);
  const Eigen::Index lo_edge = config.edge_margin;
  const Eigen::Index hi_edge = n - config.edge_margin;

  auto window_max = [&](Eigen::Index begin) {
    const Eigen::Index end = std::min(n, begin + lookahead);
    return config.threshold_fraction * y2.segment(begin, end - begin).maxCoeff();
  };

  // Threshold = mean of the last three block maxima; growth per update is
  // capped at 1.5x (else 1.1x) to ride over artefact spikes.
  std::array<double, 3> history;
  history.fill(window_max(std::min(lo_edge, n - 1)));
  std::size_t slot = 0;

  for (Eigen::Index block_start = 0; block_start < n; block_start += block) {
    const double threshold = (history[0] + history[1] + history[2]) / 3.0;
    const Eigen::Index block_end = std::min(n, block_start + block);
    for (Eigen::Index i = std::max<Eigen::Index>(block_start, 1); i < block_end; ++i) {
      if (!(y2[i - 1] <= threshold && y2[i] > threshold)) continue;
      const Eigen::Index lo = std::max<Eigen::Index>(0, i - search);
      const Eigen::Index hi = std::min<Eigen::Index>(n - 1, i + search);
      Eigen::Index r = lo;
      for (Eigen::Index k = lo + 1; k <= hi; ++k)
        if (x[k] > x[r]) r = k;
      if (r < lo_edge || r >= hi_edge) continue;
      if (!peaks.empty() && r - peaks.back() < refractory) {
        if (x[r] > x[peaks.back()]) peaks.back() = r;
        continue;
      }
      if (!peaks.empty() && r <= peaks.back()) continue;
      peaks.push_back(r);
    }
    if (block_end >= n) break;
    const double fresh = window_max(block_start);
    const double prev = history[(slot + 2) % 3];
    history[slot] = fresh <= 1.5 * prev ? fresh : 1.1 * prev;
    slot = (slot + 1) % 3;
  }

  // A replacement can pull a peak closer to its predecessor.
  RPeakList kept;
  for (auto r : peaks) {
    if (!kept.empty() && r - kept.back() < refractory) {
      if (x[r] > x[kept.back()]) kept.back() = r;
      continue;
    }
    kept.push_back(r);
  }
  return kept;
}

IntervalSet compute_intervals(const FiducialPoints& pts, int fs,
                              std::optional<Eigen::Index> previous_r) {
  const double ms = 1000.0 / fs;
  auto span = [&](const std::optional<Fiducial>& a,
                  const std::optional<Fiducial>& b) -> std::optional<double> {
    if (!a || !b) return std::nullopt;
    return static_cast<double>(b->index - a->index) * ms;
  };
  const std::optional<Fiducial> r = pts.r;
  IntervalSet set;
  set.pq = span(pts.p, pts.q);
  set.qr = span(pts.q, r);
  set.rs = span(r, pts.s);
  set.qs = span(pts.q, pts.s);
  set.st = span(pts.s, pts.t);
  if (previous_r) set.rr = static_cast<double>(pts.r.index - *previous_r) * ms;
  return set;
}

CardiacCycle delineate_cycle(const Eigen::Ref<const Signal>& x, Eigen::Index r, int fs,
                             std::optional<Eigen::Index> previous_r,
                             const DelineationConfig& config) {
  const Eigen::Index before = ms_to_samples(config.before_ms, fs);
  const Eigen::Index after = ms_to_samples(config.after_ms, fs);
  const Eigen::Index qrs = ms_to_samples(config.qrs_ms, fs);
  if (r - before < 0 || r + after >= x.size())
    throw Error(ErrorCode::kWindowOutOfBounds,
                "cycle window around R at " + std::to_string(r) + " exceeds signal");

  CardiacCycle cycle;
  cycle.window_start = r - before;
  cycle.window_end = r + after + 1;
  FiducialPoints& pts = cycle.points;
  pts.r = {r, x[r]};
  pts.q = find_wave(x, r - qrs, r, -1, config.min_prominence);
  pts.s = find_wave(x, r + 1, r + qrs + 1, -1, config.min_prominence);
  pts.p = find_wave(x, r - before, r - qrs, +1, config.min_prominence);
  pts.t = find_wave(x, r + qrs + 1, r + after + 1, +1, config.min_prominence);
  cycle.complete = pts.p && pts.q && pts.s && pts.t;
  cycle.intervals = compute_intervals(pts, fs, previous_r);
  return cycle;
}

IntervalStats interval_stats(std::span<const CardiacCycle> cycles) {
  IntervalStats stats;
  for (std::size_t k = 0; k < kOutlierIntervals.size(); ++k) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& c : cycles) {
      if (auto v = interval(c.intervals, kOutlierIntervals[k])) {
        sum += *v;
        ++count;
      }
    }
    const double mean = count ? sum / count : 0.0;
    double ss = 0.0;
    for (const auto& c : cycles)
      if (auto v = interval(c.intervals, kOutlierIntervals[k])) ss += (*v - mean) * (*v - mean);
    stats.mean[k] = mean;
    stats.sd[k] = count ? std::sqrt(ss / count) : 0.0;
    stats.count[k] = count;
  }
  return stats;
}

bool is_outlier(const CardiacCycle& cycle, const IntervalStats& stats, double sigma) {
  for (std::size_t k = 0; k < kOutlierIntervals.size(); ++k) {
    auto v = interval(cycle.intervals, kOutlierIntervals[k]);
    if (!v) return true;
    if (std::abs(*v - stats.mean[k]) > sigma * stats.sd[k]) return true;
  }
  return false;
}

OutlierResult remove_outliers(std::span<const CardiacCycle> cycles, double sigma) {
  OutlierResult result;
  result.stats = interval_stats(cycles);
  const bool use_stats = cycles.size() >= 2;
  std::vector<CardiacCycle> run;
  for (const auto& c : cycles) {
    bool outlier = false;
    if (use_stats) {
      outlier = is_outlier(c, result.stats, sigma);
    } else {
      for (auto kind : kOutlierIntervals) outlier = outlier || !interval(c.intervals, kind);
    }
    if (outlier) {
      ++result.removed;
      if (!run.empty()) result.runs.push_back(std::move(run));
      run.clear();
    } else {
      run.push_back(c);
    }
  }
  if (!run.empty()) result.runs.push_back(std::move(run));
  return result;
}

void write_cycles_csv(std::ostream& out, std::span<const CycleRow> rows) {
  out << "subject,day,episode,r_index,p_index,q_index,s_index,t_index,"
         "pq_ms,qr_ms,rs_ms,qs_ms,st_ms,rr_ms,complete\n";
  auto idx = [&](const std::optional<Fiducial>& f) {
    if (f) out << f->index;
    out << ',';
  };
  auto dur = [&](const std::optional<double>& d, bool last = false) {
    if (d) out << *d;
    if (!last) out << ',';
  };
  for (const auto& row : rows) {
    const auto& c = row.cycle;
    out << row.subject << ',' << row.day << ',' << row.episode << ',' << c.points.r.index << ',';
    idx(c.points.p);
    idx(c.points.q);
    idx(c.points.s);
    idx(c.points.t);
    dur(c.intervals.pq);
    dur(c.intervals.qr);
    dur(c.intervals.rs);
    dur(c.intervals.qs);
    dur(c.intervals.st);
    dur(c.intervals.rr);
    out << (c.complete ? 1 : 0) << '\n';
  }
}

}  // namespace ecgbench
