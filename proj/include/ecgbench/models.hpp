#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "ecgbench/features.hpp"
#include "ecgbench/trees.hpp"

namespace ecgbench {

enum class ModelKind { kForest, kLinear, kMlp };

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);

struct ForestConfig {
  int n_trees = 100;
  int max_depth = 0;     // unlimited
  int max_features = 0;  // ceil(sqrt(d))
  bool bootstrap = true;
  std::uint64_t seed = 0;
};

// L2-regularised hinge loss, C scaling the data term, balanced class weights.
// The bias is an extra constant input and is regularised with the weights.
struct LinearConfig {
  double c = 1e-3;
  bool balanced = true;
  int max_epochs = 1000;
  double tolerance = 1e-3;  // projected-gradient spread for dual coordinate descent
  std::uint64_t seed = 0;
};

struct MlpConfig {
  std::vector<int> hidden = {32, 32, 32};
  double learning_rate = 1e-4;
  int epochs = 100;
  int batch_size = 32;
  double validation_fraction = 0.1;  // diagnostics only
  std::uint64_t seed = 0;
};

using ClassifierConfig = std::variant<ForestConfig, LinearConfig, MlpConfig>;

ModelKind kind_of(const ClassifierConfig& config);
ClassifierConfig with_seed(ClassifierConfig config, std::uint64_t seed);

// z-score parameters from training data.
struct Standardizer {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd scale;

  static Standardizer fit(const Eigen::MatrixXd& x);
  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
};

struct ForestModel {
  trees::Forest forest;
};

struct LinearModel {
  Standardizer standardizer;
  Eigen::VectorXd weights;
  double bias = 0.0;
};

// Dense layers; weights[l] is (out x in).
struct MlpModel {
  Standardizer standardizer;
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;

  // Hidden layers use ReLU, the single output unit a sigmoid.
  static MlpModel init(int inputs, std::span<const int> hidden, std::uint64_t seed);
  Eigen::VectorXd logits(const Eigen::MatrixXd& x) const;  // x already standardised
  Eigen::Index parameter_count() const;
  Eigen::VectorXd flat_parameters() const;
  void set_flat_parameters(const Eigen::VectorXd& theta);
};

struct TrainingDiagnostics {
  std::vector<double> loss_curve;        // mlp: training loss per epoch
  std::vector<double> validation_curve;  // mlp: held-out loss per epoch
  double oob_accuracy = 0.0;             // forest
  int iterations = 0;                    // linear: epochs run
};

struct TrainedModel {
  ModelKind kind = ModelKind::kForest;
  std::variant<ForestModel, LinearModel, MlpModel> params;
  FeatureSchema schema = FeatureSchema::kSelected;
  Eigen::Index n_features = 0;
  std::uint64_t seed = 0;
  TrainingDiagnostics diagnostics;
};

// Binary labels: 1 = legitimate user, 0 = rest of world.
TrainedModel train(const ClassifierConfig& config, const Eigen::MatrixXd& x,
                   std::span<const int> y, FeatureSchema schema);

// Scores in [0, 1] for each row.
Eigen::VectorXd score(const TrainedModel& model, const Eigen::MatrixXd& x);
double score(const TrainedModel& model, const FeatureVector& v);

void save_model(std::ostream& out, const TrainedModel& model);
TrainedModel load_model(std::istream& in);

// Inverse-frequency ("balanced") weights n / (2 n_class) per sample.
Eigen::VectorXd balanced_sample_weights(std::span<const int> y);

// 0.5 (|w|^2 + b^2) + c * sum_i s_i max(0, 1 - t_i (w.x_i + b)), t_i in {-1,+1}.
double linear_objective(const Eigen::VectorXd& w, double b, const Eigen::MatrixXd& x,
                        std::span<const int> y, const Eigen::VectorXd& sample_weight, double c);

struct MlpGradient {
  double loss = 0.0;  // mean binary cross-entropy
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;

  Eigen::VectorXd flat() const;
};

MlpGradient mlp_loss_and_gradient(const MlpModel& net, const Eigen::MatrixXd& x,
                                  std::span<const int> y);

}  // namespace ecgbench
