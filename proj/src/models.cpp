#include "ecgbench/models.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

#include "ecgbench/error.hpp"
#include "ecgbench/random.hpp"

namespace ecgbench {

namespace {

constexpr char kModelMagic[] = "ecgbench-model";
constexpr int kModelVersion = 1;

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + e^z) without overflow.
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

void check_training_data(const Eigen::MatrixXd& x, std::span<const int> y) {
  if (static_cast<std::size_t>(x.rows()) != y.size() || x.rows() == 0)
    throw Error(ErrorCode::kInvalidArgument, "feature/label size mismatch");
  if (!x.allFinite()) throw Error(ErrorCode::kNonFiniteFeature, "non-finite feature value");
  bool pos = false, neg = false;
  for (int label : y) {
    if (label != 0 && label != 1)
      throw Error(ErrorCode::kInvalidArgument, "labels must be 0 or 1");
    (label ? pos : neg) = true;
  }
  if (!pos || !neg) throw Error(ErrorCode::kSingleClass, "training data holds one class only");
}

LinearModel train_linear(const LinearConfig& cfg, const Eigen::MatrixXd& x_raw,
                         std::span<const int> y, int& epochs_run) {
  if (!(cfg.c > 0)) throw Error(ErrorCode::kInvalidArgument, "C must be positive");
  LinearModel model;
  model.standardizer = Standardizer::fit(x_raw);
  const Eigen::MatrixXd x = model.standardizer.apply(x_raw);
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  const Eigen::VectorXd s = cfg.balanced ? balanced_sample_weights(y)
                                         : Eigen::VectorXd::Ones(n);

  // Dual coordinate descent for the L1-loss SVM (bias as constant feature).
  Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
  double b = 0.0;
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd qii = x.rowwise().squaredNorm().array() + 1.0;
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  Rng rng(cfg.seed);

  epochs_run = 0;
  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double pg_max = -std::numeric_limits<double>::infinity();
    double pg_min = std::numeric_limits<double>::infinity();
    for (Eigen::Index i : order) {
      const double t = y[static_cast<std::size_t>(i)] ? 1.0 : -1.0;
      const double upper = cfg.c * s[i];
      const double g = t * (x.row(i).dot(w) + b) - 1.0;
      double pg = g;
      if (alpha[i] == 0.0) pg = std::min(g, 0.0);
      else if (alpha[i] == upper) pg = std::max(g, 0.0);
      pg_max = std::max(pg_max, pg);
      pg_min = std::min(pg_min, pg);
      if (std::abs(pg) < 1e-12) continue;
      const double old = alpha[i];
      alpha[i] = std::clamp(old - g / qii[i], 0.0, upper);
      const double delta = (alpha[i] - old) * t;
      w += delta * x.row(i).transpose();
      b += delta;
    }
    ++epochs_run;
    if (pg_max - pg_min < cfg.tolerance) break;
  }
  model.weights = w;
  model.bias = b;
  return model;
}

struct Forward {
  std::vector<Eigen::MatrixXd> activations;  // input, hidden..., (units x batch)
  Eigen::RowVectorXd logits;
};

Forward forward(const MlpModel& net, const Eigen::MatrixXd& xt) {
  Forward f;
  f.activations.push_back(xt);
  const std::size_t layers = net.weights.size();
  for (std::size_t l = 0; l + 1 < layers; ++l) {
    Eigen::MatrixXd z = (net.weights[l] * f.activations.back()).colwise() + net.biases[l];
    f.activations.push_back(z.cwiseMax(0.0));
  }
  f.logits = ((net.weights.back() * f.activations.back()).colwise() + net.biases.back()).row(0);
  return f;
}

MlpGradient backward(const MlpModel& net, const Forward& f, std::span<const int> y) {
  const Eigen::Index batch = f.logits.size();
  MlpGradient g;
  g.weights.resize(net.weights.size());
  g.biases.resize(net.biases.size());
  Eigen::MatrixXd delta(1, batch);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < batch; ++i) {
    const double z = f.logits[i];
    const double t = y[static_cast<std::size_t>(i)];
    loss += softplus(z) - t * z;
    delta(0, i) = (sigmoid(z) - t) / batch;
  }
  g.loss = loss / batch;
  for (std::size_t l = net.weights.size(); l-- > 0;) {
    const Eigen::MatrixXd& a = f.activations[l];
    g.weights[l] = delta * a.transpose();
    g.biases[l] = delta.rowwise().sum();
    if (l == 0) break;
    Eigen::MatrixXd back = net.weights[l].transpose() * delta;
    delta = back.array() * (a.array() > 0.0).cast<double>();
  }
  return g;
}

double mean_bce(const MlpModel& net, const Eigen::MatrixXd& xt, std::span<const int> y) {
  const Forward f = forward(net, xt);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < f.logits.size(); ++i)
    loss += softplus(f.logits[i]) - y[static_cast<std::size_t>(i)] * f.logits[i];
  return loss / std::max<Eigen::Index>(1, f.logits.size());
}

MlpModel train_mlp(const MlpConfig& cfg, const Eigen::MatrixXd& x_raw, std::span<const int> y,
                   TrainingDiagnostics& diag) {
  if (cfg.epochs < 1) throw Error(ErrorCode::kInvalidArgument, "epochs must be >= 1");
  if (cfg.batch_size < 1) throw Error(ErrorCode::kInvalidArgument, "batch size must be >= 1");
  const Eigen::Index n = x_raw.rows();
  Rng rng(cfg.seed);

  // Held-out split for the validation curve.
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::shuffle(order.begin(), order.end(), rng);
  auto n_val = static_cast<Eigen::Index>(std::floor(cfg.validation_fraction * n));
  if (n - n_val < 1) n_val = 0;
  std::vector<Eigen::Index> val_rows(order.begin(), order.begin() + n_val);
  std::vector<Eigen::Index> train_rows(order.begin() + n_val, order.end());

  Eigen::MatrixXd x_train(static_cast<Eigen::Index>(train_rows.size()), x_raw.cols());
  std::vector<int> y_train;
  for (std::size_t i = 0; i < train_rows.size(); ++i) {
    x_train.row(static_cast<Eigen::Index>(i)) = x_raw.row(train_rows[i]);
    y_train.push_back(y[static_cast<std::size_t>(train_rows[i])]);
  }

  MlpModel net = MlpModel::init(static_cast<int>(x_raw.cols()), cfg.hidden,
                                derive_seed(cfg.seed, {1}));
  net.standardizer = Standardizer::fit(x_train);
  const Eigen::MatrixXd xt = net.standardizer.apply(x_train).transpose();
  Eigen::MatrixXd xv;
  std::vector<int> yv;
  if (n_val > 0) {
    Eigen::MatrixXd raw(n_val, x_raw.cols());
    for (Eigen::Index i = 0; i < n_val; ++i) {
      raw.row(i) = x_raw.row(val_rows[i]);
      yv.push_back(y[static_cast<std::size_t>(val_rows[i])]);
    }
    xv = net.standardizer.apply(raw).transpose();
  }

  // Adam (beta1 0.9, beta2 0.999, eps 1e-7).
  const double beta1 = 0.9, beta2 = 0.999, eps = 1e-7;
  Eigen::VectorXd theta = net.flat_parameters();
  Eigen::VectorXd m = Eigen::VectorXd::Zero(theta.size());
  Eigen::VectorXd v = Eigen::VectorXd::Zero(theta.size());
  long step = 0;

  const Eigen::Index nt = xt.cols();
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(nt));
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  Eigen::MatrixXd batch_x;
  std::vector<int> batch_y;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(perm.begin(), perm.end(), rng);
    double epoch_loss = 0.0;
    for (Eigen::Index start = 0; start < nt; start += cfg.batch_size) {
      const Eigen::Index size = std::min<Eigen::Index>(cfg.batch_size, nt - start);
      batch_x.resize(xt.rows(), size);
      batch_y.resize(static_cast<std::size_t>(size));
      for (Eigen::Index i = 0; i < size; ++i) {
        batch_x.col(i) = xt.col(perm[start + i]);
        batch_y[i] = y_train[static_cast<std::size_t>(perm[start + i])];
      }
      const MlpGradient g = backward(net, forward(net, batch_x), batch_y);
      epoch_loss += g.loss * size;
      const Eigen::VectorXd grad = g.flat();
      ++step;
      m = beta1 * m + (1 - beta1) * grad;
      v = beta2 * v + (1 - beta2) * grad.cwiseProduct(grad);
      const double lr_t = cfg.learning_rate * std::sqrt(1 - std::pow(beta2, step)) /
                          (1 - std::pow(beta1, step));
      theta.array() -= lr_t * m.array() / (v.array().sqrt() + eps);
      net.set_flat_parameters(theta);
    }
    diag.loss_curve.push_back(epoch_loss / nt);
    if (n_val > 0) diag.validation_curve.push_back(mean_bce(net, xv, yv));
  }
  return net;
}

void write_vector(std::ostream& out, const Eigen::Ref<const Eigen::VectorXd>& v) {
  out << v.size();
  for (Eigen::Index i = 0; i < v.size(); ++i) out << ' ' << format_double(v[i]);
  out << '\n';
}

class TokenReader {
 public:
  explicit TokenReader(std::istream& in) : in_(in) {}

  std::string word() {
    std::string w;
    if (!(in_ >> w)) throw Error(ErrorCode::kInvalidArgument, "model file ends early");
    return w;
  }
  void expect(std::string_view w) {
    if (word() != w)
      throw Error(ErrorCode::kInvalidArgument, "model file: expected '" + std::string(w) + "'");
  }
  double real() {
    const std::string w = word();
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(w.data(), w.data() + w.size(), v);
    if (ec != std::errc()) throw Error(ErrorCode::kInvalidArgument, "model file: bad number " + w);
    return v;
  }
  long integer() { return std::stol(word()); }
  std::uint64_t u64() { return std::stoull(word()); }
  Eigen::VectorXd vector() {
    const long n = integer();
    Eigen::VectorXd v(n);
    for (long i = 0; i < n; ++i) v[i] = real();
    return v;
  }

 private:
  std::istream& in_;
};

}  // namespace

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::kForest: return "forest";
    case ModelKind::kLinear: return "linear";
    case ModelKind::kMlp: return "mlp";
  }
  return "?";
}

ModelKind parse_model_kind(std::string_view name) {
  if (name == "forest") return ModelKind::kForest;
  if (name == "linear") return ModelKind::kLinear;
  if (name == "mlp") return ModelKind::kMlp;
  throw Error(ErrorCode::kInvalidArgument, "unknown classifier '" + std::string(name) + "'");
}

ModelKind kind_of(const ClassifierConfig& config) {
  return static_cast<ModelKind>(config.index());
}

ClassifierConfig with_seed(ClassifierConfig config, std::uint64_t seed) {
  std::visit([seed](auto& c) { c.seed = seed; }, config);
  return config;
}

Standardizer Standardizer::fit(const Eigen::MatrixXd& x) {
  Standardizer s;
  s.mean = x.colwise().mean();
  const Eigen::MatrixXd centered = x.rowwise() - s.mean;
  s.scale = (centered.colwise().squaredNorm() / std::max<double>(1.0, x.rows())).cwiseSqrt();
  for (Eigen::Index j = 0; j < s.scale.size(); ++j)
    if (s.scale[j] == 0.0) s.scale[j] = 1.0;
  return s;
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& x) const {
  return (x.rowwise() - mean).array().rowwise() / scale.array();
}

MlpModel MlpModel::init(int inputs, std::span<const int> hidden, std::uint64_t seed) {
  MlpModel net;
  Rng rng(seed);
  int fan_in = inputs;
  std::vector<int> sizes(hidden.begin(), hidden.end());
  sizes.push_back(1);
  for (int units : sizes) {
    // Glorot uniform.
    const double limit = std::sqrt(6.0 / (fan_in + units));
    std::uniform_real_distribution<double> u(-limit, limit);
    Eigen::MatrixXd w(units, fan_in);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = u(rng);
    net.weights.push_back(std::move(w));
    net.biases.push_back(Eigen::VectorXd::Zero(units));
    fan_in = units;
  }
  net.standardizer.mean = Eigen::RowVectorXd::Zero(inputs);
  net.standardizer.scale = Eigen::RowVectorXd::Ones(inputs);
  return net;
}

Eigen::VectorXd MlpModel::logits(const Eigen::MatrixXd& x) const {
  return forward(*this, x.transpose()).logits.transpose();
}

Eigen::Index MlpModel::parameter_count() const {
  Eigen::Index n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) n += weights[l].size() + biases[l].size();
  return n;
}

Eigen::VectorXd MlpModel::flat_parameters() const {
  Eigen::VectorXd theta(parameter_count());
  Eigen::Index k = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    theta.segment(k, weights[l].size()) = weights[l].reshaped();
    k += weights[l].size();
    theta.segment(k, biases[l].size()) = biases[l];
    k += biases[l].size();
  }
  return theta;
}

void MlpModel::set_flat_parameters(const Eigen::VectorXd& theta) {
  Eigen::Index k = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    weights[l].reshaped() = theta.segment(k, weights[l].size());
    k += weights[l].size();
    biases[l] = theta.segment(k, biases[l].size());
    k += biases[l].size();
  }
}

Eigen::VectorXd MlpGradient::flat() const {
  Eigen::Index n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) n += weights[l].size() + biases[l].size();
  Eigen::VectorXd g(n);
  Eigen::Index k = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    g.segment(k, weights[l].size()) = weights[l].reshaped();
    k += weights[l].size();
    g.segment(k, biases[l].size()) = biases[l];
    k += biases[l].size();
  }
  return g;
}

MlpGradient mlp_loss_and_gradient(const MlpModel& net, const Eigen::MatrixXd& x,
                                  std::span<const int> y) {
  return backward(net, forward(net, x.transpose()), y);
}

Eigen::VectorXd balanced_sample_weights(std::span<const int> y) {
  const double n = static_cast<double>(y.size());
  const double pos = static_cast<double>(std::count(y.begin(), y.end(), 1));
  const double neg = n - pos;
  Eigen::VectorXd w(static_cast<Eigen::Index>(y.size()));
  for (std::size_t i = 0; i < y.size(); ++i) w[i] = n / (2.0 * (y[i] ? pos : neg));
  return w;
}

double linear_objective(const Eigen::VectorXd& w, double b, const Eigen::MatrixXd& x,
                        std::span<const int> y, const Eigen::VectorXd& sample_weight, double c) {
  double data = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double t = y[static_cast<std::size_t>(i)] ? 1.0 : -1.0;
    data += sample_weight[i] * std::max(0.0, 1.0 - t * (x.row(i).dot(w) + b));
  }
  return 0.5 * (w.squaredNorm() + b * b) + c * data;
}

TrainedModel train(const ClassifierConfig& config, const Eigen::MatrixXd& x,
                   std::span<const int> y, FeatureSchema schema) {
  check_training_data(x, y);
  TrainedModel model;
  model.kind = kind_of(config);
  model.schema = schema;
  model.n_features = x.cols();
  std::visit(
      [&](const auto& cfg) {
        using T = std::decay_t<decltype(cfg)>;
        model.seed = cfg.seed;
        if constexpr (std::is_same_v<T, ForestConfig>) {
          trees::ForestParams p;
          p.n_trees = cfg.n_trees;
          p.max_depth = cfg.max_depth;
          p.max_features = cfg.max_features;
          p.bootstrap = cfg.bootstrap;
          ForestModel fm{trees::fit_forest(x, y, 2, p, cfg.seed)};
          model.diagnostics.oob_accuracy = fm.forest.oob_accuracy;
          fm.forest.bootstrap_counts.clear();
          model.params = std::move(fm);
        } else if constexpr (std::is_same_v<T, LinearConfig>) {
          model.params = train_linear(cfg, x, y, model.diagnostics.iterations);
        } else {
          model.params = train_mlp(cfg, x, y, model.diagnostics);
        }
      },
      config);
  return model;
}

Eigen::VectorXd score(const TrainedModel& model, const Eigen::MatrixXd& x) {
  if (x.cols() != model.n_features)
    throw Error(ErrorCode::kSchemaMismatch,
                "model expects " + std::to_string(model.n_features) + " features, got " +
                    std::to_string(x.cols()));
  Eigen::VectorXd out(x.rows());
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, ForestModel>) {
          for (Eigen::Index i = 0; i < x.rows(); ++i) out[i] = trees::vote_fraction(p.forest, x.row(i));
        } else if constexpr (std::is_same_v<T, LinearModel>) {
          const Eigen::VectorXd margin =
              (p.standardizer.apply(x) * p.weights).array() + p.bias;
          for (Eigen::Index i = 0; i < x.rows(); ++i) out[i] = sigmoid(margin[i]);
        } else {
          const Eigen::VectorXd z = p.logits(p.standardizer.apply(x));
          for (Eigen::Index i = 0; i < x.rows(); ++i) out[i] = sigmoid(z[i]);
        }
      },
      model.params);
  return out;
}

double score(const TrainedModel& model, const FeatureVector& v) {
  if (v.schema != model.schema)
    throw Error(ErrorCode::kSchemaMismatch, "feature schema differs from the model's");
  return score(model, Eigen::MatrixXd(v.values.transpose()))[0];
}

void save_model(std::ostream& out, const TrainedModel& model) {
  out << kModelMagic << ' ' << kModelVersion << '\n';
  out << "kind " << to_string(model.kind) << '\n';
  out << "schema " << to_string(model.schema) << ' ' << model.n_features << '\n';
  out << "seed " << model.seed << '\n';
  auto write_standardizer = [&](const Standardizer& s) {
    out << "mean ";
    write_vector(out, s.mean.transpose());
    out << "scale ";
    write_vector(out, s.scale.transpose());
  };
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, ForestModel>) {
          out << "trees " << p.forest.trees.size() << '\n';
          for (const auto& tree : p.forest.trees) {
            out << "tree " << tree.nodes.size() << '\n';
            for (const auto& node : tree.nodes) {
              out << node.feature << ' ' << format_double(node.threshold) << ' ' << node.left
                  << ' ' << node.right << ' ' << node.majority << ' '
                  << format_double(node.positive_fraction) << '\n';
            }
          }
          out << "importances ";
          write_vector(out, p.forest.importances);
          out << "oob " << format_double(p.forest.oob_accuracy) << '\n';
        } else if constexpr (std::is_same_v<T, LinearModel>) {
          write_standardizer(p.standardizer);
          out << "weights ";
          write_vector(out, p.weights);
          out << "bias " << format_double(p.bias) << '\n';
        } else {
          write_standardizer(p.standardizer);
          out << "layers " << p.weights.size() << '\n';
          for (std::size_t l = 0; l < p.weights.size(); ++l) {
            out << "layer " << p.weights[l].rows() << ' ' << p.weights[l].cols() << '\n';
            write_vector(out, p.weights[l].reshaped());
            write_vector(out, p.biases[l]);
          }
        }
      },
      model.params);
}

TrainedModel load_model(std::istream& in) {
  TokenReader r(in);
  r.expect(kModelMagic);
  if (r.integer() != kModelVersion)
    throw Error(ErrorCode::kUnsupportedFeature, "unsupported model version");
  TrainedModel model;
  r.expect("kind");
  model.kind = parse_model_kind(r.word());
  r.expect("schema");
  model.schema = parse_schema(r.word());
  model.n_features = r.integer();
  r.expect("seed");
  model.seed = r.u64();
  auto read_standardizer = [&] {
    Standardizer s;
    r.expect("mean");
    s.mean = r.vector().transpose();
    r.expect("scale");
    s.scale = r.vector().transpose();
    return s;
  };
  switch (model.kind) {
    case ModelKind::kForest: {
      ForestModel fm;
      r.expect("trees");
      const long n_trees = r.integer();
      for (long t = 0; t < n_trees; ++t) {
        r.expect("tree");
        trees::Tree tree;
        tree.nodes.resize(static_cast<std::size_t>(r.integer()));
        for (auto& node : tree.nodes) {
          node.feature = static_cast<int>(r.integer());
          node.threshold = r.real();
          node.left = static_cast<int>(r.integer());
          node.right = static_cast<int>(r.integer());
          node.majority = static_cast<int>(r.integer());
          node.positive_fraction = r.real();
        }
        fm.forest.trees.push_back(std::move(tree));
      }
      r.expect("importances");
      fm.forest.importances = r.vector();
      r.expect("oob");
      fm.forest.oob_accuracy = r.real();
      fm.forest.n_features = static_cast<int>(model.n_features);
      fm.forest.n_classes = 2;
      model.diagnostics.oob_accuracy = fm.forest.oob_accuracy;
      model.params = std::move(fm);
      break;
    }
    case ModelKind::kLinear: {
      LinearModel lm;
      lm.standardizer = read_standardizer();
      r.expect("weights");
      lm.weights = r.vector();
      r.expect("bias");
      lm.bias = r.real();
      model.params = std::move(lm);
      break;
    }
    case ModelKind::kMlp: {
      MlpModel net;
      net.standardizer = read_standardizer();
      r.expect("layers");
      const long layers = r.integer();
      for (long l = 0; l < layers; ++l) {
        r.expect("layer");
        const long rows = r.integer(), cols = r.integer();
        Eigen::VectorXd w = r.vector();
        if (w.size() != rows * cols)
          throw Error(ErrorCode::kInvalidArgument, "model file: layer size mismatch");
        net.weights.push_back(w.reshaped(rows, cols));
        net.biases.push_back(r.vector());
      }
      model.params = std::move(net);
      break;
    }
  }
  return model;
}

}  // namespace ecgbench
