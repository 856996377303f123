#include "ecgbench/features.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include "ecgbench/error.hpp"
#include "ecgbench/random.hpp"
#include "ecgbench/trees.hpp"

namespace ecgbench {

namespace {

constexpr std::array<std::string_view, 15> kFullNames = {
    "QR_min", "QR_max", "QR_mean", "QR_median", "QR_std",
    "RS_min", "RS_max", "RS_mean", "RS_median", "RS_std",
    "QS_min", "QS_max", "QS_mean", "QS_median", "QS_std"};
constexpr std::array<std::string_view, 9> kSelectedNames = {
    "QR_min", "QR_max", "QR_mean", "RS_min", "RS_max", "RS_mean",
    "QS_min", "QS_max", "QS_mean"};
// Column of each selected feature in the full schema.
constexpr std::array<int, 9> kSelectedColumns = {0, 1, 2, 5, 6, 7, 10, 11, 12};

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw Error(ErrorCode::kInvalidArgument, "bad number '" + s + "'");
  return v;
}

}  // namespace

std::span<const std::string_view> schema_names(FeatureSchema schema) {
  if (schema == FeatureSchema::kFull) return kFullNames;
  return kSelectedNames;
}

std::string_view to_string(FeatureSchema schema) {
  return schema == FeatureSchema::kFull ? "full" : "selected";
}

FeatureSchema parse_schema(std::string_view name) {
  if (name == "full") return FeatureSchema::kFull;
  if (name == "selected") return FeatureSchema::kSelected;
  throw Error(ErrorCode::kSchemaMismatch, "unknown schema '" + std::string(name) + "'");
}

std::string format_double(double value) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

FeatureVector compute_window_features(BeatWindow window) {
  FeatureVector fv;
  fv.schema = FeatureSchema::kFull;
  fv.values.resize(15);
  const std::array<IntervalKind, 3> kinds = {IntervalKind::kQR, IntervalKind::kRS,
                                             IntervalKind::kQS};
  for (std::size_t k = 0; k < kinds.size(); ++k) {
    std::array<double, 3> v;
    for (std::size_t i = 0; i < 3; ++i) {
      auto value = interval(window[i].intervals, kinds[k]);
      if (!value)
        throw Error(ErrorCode::kIncompleteCycle,
                    "cycle lacks " + std::string(interval_name(kinds[k])));
      v[i] = *value;
    }
    std::array<double, 3> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    const double mean = (v[0] + v[1] + v[2]) / 3.0;
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    const auto base = static_cast<Eigen::Index>(5 * k);
    fv.values[base + 0] = sorted[0];
    fv.values[base + 1] = sorted[2];
    // Clamp keeps min <= mean <= max exact under rounding.
    fv.values[base + 2] = std::clamp(mean, sorted[0], sorted[2]);
    fv.values[base + 3] = sorted[1];
    fv.values[base + 4] = std::sqrt(var / 3.0);
  }
  return fv;
}

std::vector<FeatureVector> run_windows(std::span<const CardiacCycle> run, int stride, int fs,
                                       const WindowLabel& base) {
  if (stride < 1) throw Error(ErrorCode::kInvalidArgument, "window stride must be >= 1");
  std::vector<FeatureVector> out;
  for (std::size_t i = 0; i + 3 <= run.size(); i += static_cast<std::size_t>(stride)) {
    FeatureVector fv = compute_window_features(BeatWindow(run.subspan(i, 3)));
    fv.label = base;
    fv.label.t_start_s = base.t_start_s + static_cast<double>(run[i].points.r.index) / fs;
    out.push_back(std::move(fv));
  }
  return out;
}

FeatureVector select_features(const FeatureVector& full) {
  if (full.schema != FeatureSchema::kFull || full.values.size() != 15)
    throw Error(ErrorCode::kSchemaMismatch, "select_features expects the full schema");
  FeatureVector out;
  out.schema = FeatureSchema::kSelected;
  out.label = full.label;
  out.values.resize(9);
  for (int i = 0; i < 9; ++i) out.values[i] = full.values[kSelectedColumns[i]];
  return out;
}

LabeledDataset select_features(const LabeledDataset& full) {
  if (full.schema != FeatureSchema::kFull)
    throw Error(ErrorCode::kSchemaMismatch, "select_features expects the full schema");
  LabeledDataset out;
  out.schema = FeatureSchema::kSelected;
  out.labels = full.labels;
  out.shortfall = full.shortfall;
  out.features.resize(full.size(), 9);
  for (int i = 0; i < 9; ++i) out.features.col(i) = full.features.col(kSelectedColumns[i]);
  return out;
}

std::vector<std::string> LabeledDataset::subjects() const {
  std::set<std::string> s;
  for (const auto& l : labels) s.insert(l.subject_id);
  return {s.begin(), s.end()};
}

std::map<std::string, std::size_t> LabeledDataset::per_subject_counts() const {
  std::map<std::string, std::size_t> counts;
  for (const auto& l : labels) ++counts[l.subject_id];
  return counts;
}

FeatureVector LabeledDataset::row(Eigen::Index i) const {
  return {features.row(i).transpose(), schema, labels[static_cast<std::size_t>(i)]};
}

LabeledDataset LabeledDataset::from_vectors(std::span<const FeatureVector> vectors) {
  LabeledDataset ds;
  if (vectors.empty()) {
    ds.features.resize(0, schema_size(ds.schema));
    return ds;
  }
  ds.schema = vectors.front().schema;
  const Eigen::Index d = schema_size(ds.schema);
  ds.features.resize(static_cast<Eigen::Index>(vectors.size()), d);
  ds.labels.reserve(vectors.size());
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    if (vectors[i].schema != ds.schema || vectors[i].values.size() != d)
      throw Error(ErrorCode::kSchemaMismatch, "mixed schemas in one dataset");
    ds.features.row(static_cast<Eigen::Index>(i)) = vectors[i].values.transpose();
    ds.labels.push_back(vectors[i].label);
  }
  return ds;
}

void LabeledDataset::append(const LabeledDataset& other) {
  if (other.size() == 0) return;
  if (size() == 0) {
    *this = other;
    return;
  }
  if (other.schema != schema)
    throw Error(ErrorCode::kSchemaMismatch, "cannot append datasets with different schemas");
  Eigen::MatrixXd merged(size() + other.size(), features.cols());
  merged << features, other.features;
  features = std::move(merged);
  labels.insert(labels.end(), other.labels.begin(), other.labels.end());
  shortfall.insert(shortfall.end(), other.shortfall.begin(), other.shortfall.end());
}

LabeledDataset LabeledDataset::subset(std::span<const Eigen::Index> rows) const {
  LabeledDataset out;
  out.schema = schema;
  out.features.resize(static_cast<Eigen::Index>(rows.size()), features.cols());
  out.labels.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.features.row(static_cast<Eigen::Index>(i)) = features.row(rows[i]);
    out.labels.push_back(labels[static_cast<std::size_t>(rows[i])]);
  }
  return out;
}

std::vector<std::size_t> allocate_evenly(std::span<const std::size_t> supply,
                                         std::size_t target) {
  std::vector<std::size_t> alloc(supply.size(), 0);
  std::size_t remaining = target;
  // Bulk rounds first, then single units, so large targets stay cheap.
  while (remaining > 0) {
    std::size_t open = 0;
    std::size_t min_room = SIZE_MAX;
    for (std::size_t i = 0; i < supply.size(); ++i) {
      if (alloc[i] < supply[i]) {
        ++open;
        min_room = std::min(min_room, supply[i] - alloc[i]);
      }
    }
    if (open == 0) break;
    const std::size_t per_cell = std::min(min_room, remaining / open);
    if (per_cell > 0) {
      for (std::size_t i = 0; i < supply.size(); ++i)
        if (alloc[i] < supply[i]) alloc[i] += per_cell;
      remaining -= per_cell * open;
      continue;
    }
    for (std::size_t i = 0; i < supply.size() && remaining > 0; ++i) {
      if (alloc[i] < supply[i]) {
        ++alloc[i];
        --remaining;
      }
    }
  }
  return alloc;
}

std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t count,
                                                    std::uint64_t seed) {
  count = std::min(count, n);
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(count);
  std::sort(pool.begin(), pool.end());
  return pool;
}

LabeledDataset compose_dataset(const LabeledDataset& pool, std::size_t target_per_subject,
                               std::uint64_t seed,
                               std::span<const std::string> required_subjects) {
  // subject -> day -> rows (in pool order)
  std::map<std::string, std::map<int, std::vector<Eigen::Index>>> cells;
  for (Eigen::Index i = 0; i < pool.size(); ++i) {
    const auto& l = pool.labels[static_cast<std::size_t>(i)];
    cells[l.subject_id][l.day_index].push_back(i);
  }
  for (const auto& s : required_subjects) {
    if (!cells.contains(s))
      throw Error(ErrorCode::kEmptySubject, "subject " + s + " has no windows");
  }

  std::vector<Eigen::Index> chosen;
  std::vector<std::string> shortfall;
  std::uint64_t subject_no = 0;
  for (const auto& [subject, days] : cells) {
    std::vector<std::size_t> supply;
    std::size_t total = 0;
    for (const auto& [day, rows] : days) {
      supply.push_back(rows.size());
      total += rows.size();
    }
    if (total < target_per_subject) shortfall.push_back(subject);
    const auto alloc = allocate_evenly(supply, target_per_subject);
    std::size_t d = 0;
    for (const auto& [day, rows] : days) {
      const auto picks = sample_without_replacement(
          rows.size(), alloc[d], derive_seed(seed, {subject_no, static_cast<std::uint64_t>(day)}));
      for (auto p : picks) chosen.push_back(rows[p]);
      ++d;
    }
    ++subject_no;
  }
  LabeledDataset out = pool.subset(chosen);
  out.shortfall = std::move(shortfall);
  return out;
}

FeatureRanking rank_features(const LabeledDataset& dataset, std::uint64_t seed, int n_trees) {
  const auto subjects = dataset.subjects();
  if (subjects.size() < 2)
    throw Error(ErrorCode::kSingleClass, "feature ranking needs at least two subjects");
  std::map<std::string, int> class_of;
  for (std::size_t i = 0; i < subjects.size(); ++i) class_of[subjects[i]] = static_cast<int>(i);
  std::vector<int> y;
  y.reserve(dataset.labels.size());
  for (const auto& l : dataset.labels) y.push_back(class_of[l.subject_id]);

  trees::ForestParams params;
  params.n_trees = n_trees;
  params.rule = trees::SplitRule::kRandom;
  params.bootstrap = false;
  params.max_features = 0;
  const trees::Forest forest = trees::fit_forest(dataset.features, y,
                                                 static_cast<int>(subjects.size()), params, seed);

  FeatureRanking ranking;
  const auto names = schema_names(dataset.schema);
  const Eigen::Index d = dataset.features.cols();
  for (Eigen::Index j = 0; j < d; ++j)
    ranking.ranked.emplace_back(std::string(names[j]), forest.importances[j]);
  std::stable_sort(ranking.ranked.begin(), ranking.ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });

  const Eigen::MatrixXd centered =
      dataset.features.rowwise() - dataset.features.colwise().mean();
  const Eigen::VectorXd norms = centered.colwise().norm().transpose();
  ranking.constant.resize(static_cast<std::size_t>(d));
  ranking.correlation = Eigen::MatrixXd::Zero(d, d);
  for (Eigen::Index a = 0; a < d; ++a) {
    ranking.constant[a] = norms[a] == 0.0;
    for (Eigen::Index b = 0; b < d; ++b) {
      if (norms[a] == 0.0 || norms[b] == 0.0) continue;
      ranking.correlation(a, b) = centered.col(a).dot(centered.col(b)) / (norms[a] * norms[b]);
    }
  }
  return ranking;
}

void write_feature_csv(std::ostream& out, const LabeledDataset& dataset) {
  for (auto name : schema_names(dataset.schema)) out << name << ',';
  out << "subject_id,day_index,t_start_s,run\n";
  for (Eigen::Index i = 0; i < dataset.size(); ++i) {
    for (Eigen::Index j = 0; j < dataset.features.cols(); ++j)
      out << format_double(dataset.features(i, j)) << ',';
    const auto& l = dataset.labels[static_cast<std::size_t>(i)];
    out << l.subject_id << ',' << l.day_index << ',' << format_double(l.t_start_s) << ','
        << l.run << '\n';
  }
}

LabeledDataset read_feature_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::kSchemaMismatch, "empty feature CSV");
  const auto header = split_csv_line(line);
  std::optional<FeatureSchema> schema;
  for (auto candidate : {FeatureSchema::kFull, FeatureSchema::kSelected}) {
    const auto names = schema_names(candidate);
    if (header.size() != names.size() + 4) continue;
    if (std::equal(names.begin(), names.end(), header.begin())) schema = candidate;
  }
  if (!schema) throw Error(ErrorCode::kSchemaMismatch, "unrecognised feature CSV header");
  const auto d = static_cast<std::size_t>(schema_size(*schema));

  std::vector<double> values;
  LabeledDataset ds;
  ds.schema = *schema;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != d + 4)
      throw Error(ErrorCode::kSchemaMismatch, "feature CSV row has wrong column count");
    for (std::size_t j = 0; j < d; ++j) values.push_back(parse_double(cells[j]));
    WindowLabel l;
    l.subject_id = cells[d];
    l.day_index = static_cast<int>(parse_double(cells[d + 1]));
    l.t_start_s = parse_double(cells[d + 2]);
    l.run = static_cast<int>(parse_double(cells[d + 3]));
    ds.labels.push_back(std::move(l));
  }
  ds.features = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                               Eigen::RowMajor>>(
      values.data(), static_cast<Eigen::Index>(ds.labels.size()), static_cast<Eigen::Index>(d));
  return ds;
}

}  // namespace ecgbench
