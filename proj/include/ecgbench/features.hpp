#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "ecgbench/segmentation.hpp"

namespace ecgbench {

// kFull: {min,max,mean,median,std} x {QR,RS,QS}; kSelected: {min,max,mean}
// x {QR,RS,QS}. Values are milliseconds.
enum class FeatureSchema { kFull, kSelected };

std::span<const std::string_view> schema_names(FeatureSchema schema);
inline Eigen::Index schema_size(FeatureSchema schema) {
  return static_cast<Eigen::Index>(schema_names(schema).size());
}
std::string_view to_string(FeatureSchema schema);
FeatureSchema parse_schema(std::string_view name);

struct WindowLabel {
  std::string subject_id;
  int day_index = 0;
  double t_start_s = 0.0;  // seconds from day start
  int run = 0;             // clean-run id, unique within (subject, day)
};

struct FeatureVector {
  Eigen::VectorXd values;
  FeatureSchema schema = FeatureSchema::kFull;
  WindowLabel label;
};

// Three consecutive cycles from one clean run.
using BeatWindow = std::span<const CardiacCycle, 3>;

FeatureVector compute_window_features(BeatWindow window);

// Windows over a clean run: starts at 0, stride, 2*stride, ... The label's
// t_start_s is `t0_s` plus the first R peak time.
std::vector<FeatureVector> run_windows(std::span<const CardiacCycle> run, int stride, int fs,
                                       const WindowLabel& base);

FeatureVector select_features(const FeatureVector& full);

struct LabeledDataset {
  FeatureSchema schema = FeatureSchema::kFull;
  Eigen::MatrixXd features;  // one row per window
  std::vector<WindowLabel> labels;
  std::vector<std::string> shortfall;  // subjects below the composition target

  Eigen::Index size() const { return features.rows(); }
  std::vector<std::string> subjects() const;
  std::map<std::string, std::size_t> per_subject_counts() const;
  FeatureVector row(Eigen::Index i) const;

  static LabeledDataset from_vectors(std::span<const FeatureVector> vectors);
  void append(const LabeledDataset& other);
  LabeledDataset subset(std::span<const Eigen::Index> rows) const;
};

LabeledDataset select_features(const LabeledDataset& full);

// Spreads `target` over cells one unit at a time (round-robin), skipping
// exhausted cells. Counts differ by at most one wherever supply allows.
std::vector<std::size_t> allocate_evenly(std::span<const std::size_t> supply,
                                         std::size_t target);

// Draws `count` distinct positions from [0, n), returned ascending.
std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t count,
                                                    std::uint64_t seed);

// Per-subject subsample, evenly spread over days. Subjects with fewer windows
// than the target keep all of them and are listed in `shortfall`.
LabeledDataset compose_dataset(const LabeledDataset& pool, std::size_t target_per_subject,
                               std::uint64_t seed,
                               std::span<const std::string> required_subjects = {});

struct FeatureRanking {
  std::vector<std::pair<std::string, double>> ranked;  // descending importance
  Eigen::MatrixXd correlation;                        // Pearson, schema order
  std::vector<bool> constant;                         // per column
};

// Extremely randomised trees (100 estimators) on subject labels plus the
// Pearson correlation matrix; constant columns correlate as 0 and are flagged.
FeatureRanking rank_features(const LabeledDataset& dataset, std::uint64_t seed,
                             int n_trees = 100);

// Feature CSV: schema columns, subject_id, day_index, t_start_s, run.
void write_feature_csv(std::ostream& out, const LabeledDataset& dataset);
LabeledDataset read_feature_csv(std::istream& in);

std::string format_double(double value);

}  // namespace ecgbench
