#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ecgbench/features.hpp"
#include "ecgbench/models.hpp"

namespace ecgbench {

enum class Scenario { kS1, kS2a, kS2b, kS2c };

std::string_view to_string(Scenario scenario);
Scenario parse_scenario(std::string_view name);  // "1", "2a", "s2b", ...

struct ScenarioSpec {
  Scenario variant = Scenario::kS1;
  std::size_t user_train = 4000;
  std::size_t rest_train = 4000;
  std::size_t user_test = 1000;
  std::size_t attacker_test = 1000;
  std::vector<int> fusion_levels = {1, 2, 3, 4, 5};
  std::uint64_t seed = 0;

  static ScenarioSpec make(Scenario variant, std::uint64_t seed = 0);

  // Days used for user training; empty means any day (S1).
  std::vector<int> train_days() const;
  // User test windows come from days >= this (0 for S1).
  int first_test_day() const;
};

// Label 1 = legitimate user, 0 = rest of world (train) or attacker (test).
struct Split {
  LabeledDataset train;
  std::vector<int> train_labels;
  LabeledDataset test;
  std::vector<int> test_labels;
  std::string user;
  std::string attacker;
  bool shrunk = false;
};

Split build_split(const ScenarioSpec& spec, const LabeledDataset& dataset,
                  const std::string& user, const std::string& attacker, std::uint64_t seed);

// Throws kProtocolViolation when the attacker leaks into training, labels do
// not match subjects, or S2 day partitions are broken.
void check_split(const Split& split, const ScenarioSpec& spec);

// Fusion only combines scores that share a key.
struct ScoreKey {
  int day = 0;
  int run = 0;
  bool operator==(const ScoreKey&) const = default;
};

struct PairEvaluation {
  std::string user;
  std::string attacker;
  std::vector<double> genuine;
  std::vector<double> impostor;
  std::vector<ScoreKey> genuine_keys;
  std::vector<ScoreKey> impostor_keys;
  std::size_t n_train = 0;
  bool shrunk = false;
};

PairEvaluation evaluate_pair(const ScenarioSpec& spec, const LabeledDataset& dataset,
                             const ClassifierConfig& classifier, const std::string& user,
                             const std::string& attacker, std::uint64_t seed);

struct RocCurve {
  std::vector<double> fpr;  // (0,0) first, (1,1) last
  std::vector<double> tpr;
  std::vector<double> thresholds;  // +inf for the first point
  double auc = 0.0;
  double eer = 0.0;
};

RocCurve compute_roc(std::span<const double> genuine, std::span<const double> impostor);

// Means over disjoint groups of k consecutive scores with the same key;
// incomplete trailing groups are dropped.
std::vector<double> fuse_decisions(std::span<const double> scores,
                                   std::span<const ScoreKey> keys, int k);
std::vector<double> fuse_decisions(std::span<const double> scores, int k);

struct LevelResult {
  int k = 1;
  RocCurve roc;
  std::size_t n_genuine = 0;
  std::size_t n_impostor = 0;
};

struct PairMetrics {
  std::string user;
  std::string attacker;
  std::vector<double> auc;  // per fusion level
  std::vector<double> eer;
  bool shrunk = false;
};

struct FailedPair {
  std::string user;
  std::string attacker;
  std::string reason;
};

struct EvalReport {
  Scenario scenario = Scenario::kS1;
  ModelKind classifier = ModelKind::kForest;
  std::uint64_t seed = 0;
  std::vector<LevelResult> levels;
  std::vector<PairMetrics> pairs;
  std::vector<FailedPair> failed;
  std::vector<std::string> excluded_subjects;
  double difficult_threshold = 0.0;  // mean + 2 SD of unfused pair EERs
  double difficult_fraction = 0.0;
  double runtime_s = 0.0;  // not written to report files
};

EvalReport aggregate_report(std::span<const PairEvaluation> pairs,
                            std::span<const int> fusion_levels);

struct EvalOptions {
  ScenarioSpec scenario;
  ClassifierConfig classifier;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
};

// Subjects missing a training day or every test day are excluded for S2.
std::vector<std::string> eligible_subjects(const LabeledDataset& dataset, const ScenarioSpec& spec,
                                           std::vector<std::string>* excluded = nullptr);

// All ordered pairs of eligible subjects.
EvalReport run_evaluation(const EvalOptions& options, const LabeledDataset& dataset);

// Default classifier for a kind (mlp epochs follow the scenario).
ClassifierConfig default_classifier(ModelKind kind, Scenario scenario);

std::uint64_t subject_hash(std::string_view subject);

void write_pairs_csv(std::ostream& out, const EvalReport& report);
void write_roc_csv(std::ostream& out, const LevelResult& level);
void write_results_csv(std::ostream& out, std::span<const EvalReport> reports);
void write_summary(std::ostream& out, std::span<const EvalReport> reports);

// pairs.csv, roc_k<k>.csv, results.csv, summary.txt under dir.
void write_report_files(const std::filesystem::path& dir, const EvalReport& report);

}  // namespace ecgbench
