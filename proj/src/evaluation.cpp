#include "ecgbench/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <chrono>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <set>
#include <tuple>

#include <spdlog/spdlog.h>

#include "ecgbench/error.hpp"
#include "ecgbench/parallel.hpp"
#include "ecgbench/random.hpp"

namespace ecgbench {

namespace {

constexpr std::size_t kMinCell = 10;

using Rows = std::vector<Eigen::Index>;
// subject -> day -> rows in time order
using DatasetIndex = std::map<std::string, std::map<int, Rows>>;

bool time_less(const WindowLabel& a, const WindowLabel& b) {
  return std::tie(a.subject_id, a.day_index, a.t_start_s, a.run) <
         std::tie(b.subject_id, b.day_index, b.t_start_s, b.run);
}

DatasetIndex index_dataset(const LabeledDataset& dataset) {
  DatasetIndex index;
  for (Eigen::Index i = 0; i < dataset.size(); ++i) {
    const auto& l = dataset.labels[static_cast<std::size_t>(i)];
    index[l.subject_id][l.day_index].push_back(i);
  }
  for (auto& [subject, days] : index)
    for (auto& [day, rows] : days)
      std::stable_sort(rows.begin(), rows.end(), [&](Eigen::Index a, Eigen::Index b) {
        return time_less(dataset.labels[a], dataset.labels[b]);
      });
  return index;
}

std::size_t total(const std::vector<const Rows*>& cells) {
  std::size_t n = 0;
  for (const auto* c : cells) n += c->size();
  return n;
}

// `target` rows spread evenly over the cells, random within each cell.
Rows draw_evenly(const std::vector<const Rows*>& cells, std::size_t target, std::uint64_t seed) {
  std::vector<std::size_t> supply;
  for (const auto* c : cells) supply.push_back(c->size());
  const auto alloc = allocate_evenly(supply, target);
  Rows out;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    for (auto pick : sample_without_replacement(cells[c]->size(), alloc[c], derive_seed(seed, {c})))
      out.push_back((*cells[c])[pick]);
  }
  return out;
}

void sort_by_time(Rows& rows, const LabeledDataset& dataset) {
  std::sort(rows.begin(), rows.end(), [&](Eigen::Index a, Eigen::Index b) {
    return time_less(dataset.labels[a], dataset.labels[b]);
  });
}

std::vector<const Rows*> day_cells(const std::map<int, Rows>& days,
                                   const std::function<bool(int)>& keep) {
  std::vector<const Rows*> cells;
  for (const auto& [day, rows] : days)
    if (keep(day)) cells.push_back(&rows);
  return cells;
}

std::size_t scaled(std::size_t target, double f) {
  return static_cast<std::size_t>(std::floor(static_cast<double>(target) * f + 1e-9));
}

double ratio(std::size_t supply, std::size_t target) {
  return target == 0 ? 1.0 : static_cast<double>(supply) / static_cast<double>(target);
}

void require_floor(std::size_t n, const char* what, const std::string& user,
                   const std::string& attacker) {
  if (n < kMinCell)
    throw Error(ErrorCode::kInsufficientData,
                std::string(what) + " has " + std::to_string(n) + " windows for pair " + user +
                    "/" + attacker);
}

void violation(const std::string& what) { throw Error(ErrorCode::kProtocolViolation, what); }

std::string fmt_fixed(double v, int digits) {
  if (!std::isfinite(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

std::string_view to_string(Scenario scenario) {
  switch (scenario) {
    case Scenario::kS1: return "1";
    case Scenario::kS2a: return "2a";
    case Scenario::kS2b: return "2b";
    case Scenario::kS2c: return "2c";
  }
  return "?";
}

Scenario parse_scenario(std::string_view name) {
  if (!name.empty() && (name.front() == 's' || name.front() == 'S')) name.remove_prefix(1);
  if (name == "1") return Scenario::kS1;
  if (name == "2a") return Scenario::kS2a;
  if (name == "2b") return Scenario::kS2b;
  if (name == "2c") return Scenario::kS2c;
  throw Error(ErrorCode::kInvalidArgument, "unknown scenario '" + std::string(name) + "'");
}

ScenarioSpec ScenarioSpec::make(Scenario variant, std::uint64_t seed) {
  ScenarioSpec spec;
  spec.variant = variant;
  spec.seed = seed;
  if (variant == Scenario::kS2a) {
    spec.user_train = spec.rest_train = 2000;
    spec.user_test = spec.attacker_test = 500;
  }
  return spec;
}

std::vector<int> ScenarioSpec::train_days() const {
  switch (variant) {
    case Scenario::kS1: return {};
    case Scenario::kS2a: return {2};
    case Scenario::kS2b: return {2, 3};
    case Scenario::kS2c: return {2, 3, 4};
  }
  return {};
}

int ScenarioSpec::first_test_day() const {
  const auto days = train_days();
  return days.empty() ? 0 : days.back() + 1;
}

Split build_split(const ScenarioSpec& spec, const LabeledDataset& dataset,
                  const std::string& user, const std::string& attacker, std::uint64_t seed) {
  if (user == attacker) throw Error(ErrorCode::kInvalidArgument, "user and attacker coincide");
  const DatasetIndex index = index_dataset(dataset);
  const auto u_it = index.find(user);
  const auto a_it = index.find(attacker);
  if (u_it == index.end() || a_it == index.end())
    throw Error(ErrorCode::kInsufficientData,
                "no windows for " + (u_it == index.end() ? user : attacker));

  std::vector<const Rows*> rest_cells;
  for (const auto& [subject, days] : index) {
    if (subject == user || subject == attacker) continue;
    for (const auto& [day, rows] : days) rest_cells.push_back(&rows);
  }
  const auto attacker_cells = day_cells(a_it->second, [](int) { return true; });
  const std::size_t rest_supply = total(rest_cells);
  const std::size_t attacker_supply = total(attacker_cells);

  Split split;
  split.user = user;
  split.attacker = attacker;
  Rows user_train, user_test;
  std::size_t n_rest = 0, n_attacker = 0;

  if (spec.variant == Scenario::kS1) {
    const auto user_cells = day_cells(u_it->second, [](int) { return true; });
    Rows all_user;
    for (const auto* c : user_cells) all_user.insert(all_user.end(), c->begin(), c->end());
    // One factor for every part keeps the 80/20 ratio when data is short.
    const double f = std::min({1.0, ratio(all_user.size(), spec.user_train + spec.user_test),
                               ratio(rest_supply, spec.rest_train),
                               ratio(attacker_supply, spec.attacker_test)});
    split.shrunk = f < 1.0;
    const std::size_t n_ut = scaled(spec.user_train, f);
    const std::size_t n_ute = scaled(spec.user_test, f);
    n_rest = scaled(spec.rest_train, f);
    n_attacker = scaled(spec.attacker_test, f);
    require_floor(n_ut, "user train", user, attacker);
    require_floor(n_ute, "user test", user, attacker);
    const auto picks = sample_without_replacement(all_user.size(), n_ut + n_ute,
                                                  derive_seed(seed, {1}));
    const auto test_pos = sample_without_replacement(picks.size(), n_ute, derive_seed(seed, {2}));
    std::vector<bool> is_test(picks.size(), false);
    for (auto t : test_pos) is_test[t] = true;
    for (std::size_t i = 0; i < picks.size(); ++i)
      (is_test[i] ? user_test : user_train).push_back(all_user[picks[i]]);
  } else {
    const auto days = spec.train_days();
    for (int d : days)
      if (!u_it->second.count(d) || u_it->second.at(d).empty())
        throw Error(ErrorCode::kMissingDay,
                    user + " has no windows on day " + std::to_string(d));
    const int first_test = spec.first_test_day();
    const auto train_cells = day_cells(u_it->second, [&](int d) {
      return std::find(days.begin(), days.end(), d) != days.end();
    });
    const auto test_cells = day_cells(u_it->second, [&](int d) { return d >= first_test; });
    if (total(test_cells) == 0)
      throw Error(ErrorCode::kMissingDay,
                  user + " has no windows from day " + std::to_string(first_test) + " on");
    const double f_train = std::min(
        {1.0, ratio(total(train_cells), spec.user_train), ratio(rest_supply, spec.rest_train)});
    const double f_test = std::min({1.0, ratio(total(test_cells), spec.user_test),
                                    ratio(attacker_supply, spec.attacker_test)});
    split.shrunk = f_train < 1.0 || f_test < 1.0;
    const std::size_t n_ut = scaled(spec.user_train, f_train);
    const std::size_t n_ute = scaled(spec.user_test, f_test);
    n_rest = scaled(spec.rest_train, f_train);
    n_attacker = scaled(spec.attacker_test, f_test);
    require_floor(n_ut, "user train", user, attacker);
    require_floor(n_ute, "user test", user, attacker);
    user_train = draw_evenly(train_cells, n_ut, derive_seed(seed, {1}));
    user_test = draw_evenly(test_cells, n_ute, derive_seed(seed, {2}));
  }
  require_floor(n_rest, "rest-of-world train", user, attacker);
  require_floor(n_attacker, "attacker test", user, attacker);
  Rows rest = draw_evenly(rest_cells, n_rest, derive_seed(seed, {3}));
  Rows attack = draw_evenly(attacker_cells, n_attacker, derive_seed(seed, {4}));

  for (Rows* r : {&user_train, &user_test, &rest, &attack}) sort_by_time(*r, dataset);
  Rows train_rows = user_train;
  train_rows.insert(train_rows.end(), rest.begin(), rest.end());
  Rows test_rows = user_test;
  test_rows.insert(test_rows.end(), attack.begin(), attack.end());
  split.train = dataset.subset(train_rows);
  split.test = dataset.subset(test_rows);
  split.train_labels.assign(user_train.size(), 1);
  split.train_labels.resize(train_rows.size(), 0);
  split.test_labels.assign(user_test.size(), 1);
  split.test_labels.resize(test_rows.size(), 0);
  return split;
}

void check_split(const Split& split, const ScenarioSpec& spec) {
  if (split.train_labels.size() != static_cast<std::size_t>(split.train.size()) ||
      split.test_labels.size() != static_cast<std::size_t>(split.test.size()))
    violation("label count differs from window count");
  const auto days = spec.train_days();
  const int first_test = spec.first_test_day();
  std::set<std::tuple<int, double, int>> user_train_keys;
  for (std::size_t i = 0; i < split.train_labels.size(); ++i) {
    const auto& l = split.train.labels[i];
    if (l.subject_id == split.attacker) violation("attacker " + split.attacker + " in training");
    if (split.train_labels[i] == 1) {
      if (l.subject_id != split.user) violation("positive training window from " + l.subject_id);
      if (!days.empty() && std::find(days.begin(), days.end(), l.day_index) == days.end())
        violation("user training window from day " + std::to_string(l.day_index));
      user_train_keys.emplace(l.day_index, l.t_start_s, l.run);
    } else if (l.subject_id == split.user) {
      violation("user window labelled rest-of-world");
    }
  }
  for (std::size_t i = 0; i < split.test_labels.size(); ++i) {
    const auto& l = split.test.labels[i];
    if (split.test_labels[i] == 1) {
      if (l.subject_id != split.user) violation("genuine test window from " + l.subject_id);
      if (first_test > 0 && l.day_index < first_test)
        violation("user test window from training-period day " + std::to_string(l.day_index));
      if (user_train_keys.count({l.day_index, l.t_start_s, l.run}))
        violation("user window in both train and test");
    } else if (l.subject_id != split.attacker) {
      violation("impostor test window from " + l.subject_id);
    }
  }
}

PairEvaluation evaluate_pair(const ScenarioSpec& spec, const LabeledDataset& dataset,
                             const ClassifierConfig& classifier, const std::string& user,
                             const std::string& attacker, std::uint64_t seed) {
  const Split split = build_split(spec, dataset, user, attacker, seed);
  check_split(split, spec);
  const TrainedModel model = train(with_seed(classifier, derive_seed(seed, {5})),
                                   split.train.features, split.train_labels, dataset.schema);
  const Eigen::VectorXd scores = score(model, split.test.features);
  PairEvaluation pe;
  pe.user = user;
  pe.attacker = attacker;
  pe.n_train = split.train_labels.size();
  pe.shrunk = split.shrunk;
  for (std::size_t i = 0; i < split.test_labels.size(); ++i) {
    const auto& l = split.test.labels[i];
    const ScoreKey key{l.day_index, l.run};
    if (split.test_labels[i] == 1) {
      pe.genuine.push_back(scores[static_cast<Eigen::Index>(i)]);
      pe.genuine_keys.push_back(key);
    } else {
      pe.impostor.push_back(scores[static_cast<Eigen::Index>(i)]);
      pe.impostor_keys.push_back(key);
    }
  }
  return pe;
}

RocCurve compute_roc(std::span<const double> genuine, std::span<const double> impostor) {
  if (genuine.empty() || impostor.empty())
    throw Error(ErrorCode::kEmptyScores, "ROC needs genuine and impostor scores");
  std::vector<double> g(genuine.begin(), genuine.end());
  std::vector<double> im(impostor.begin(), impostor.end());
  for (const auto* v : {&g, &im})
    for (double s : *v)
      if (std::isnan(s)) throw Error(ErrorCode::kInvalidArgument, "NaN score");
  std::sort(g.begin(), g.end(), std::greater<>());
  std::sort(im.begin(), im.end(), std::greater<>());
  const double n_g = static_cast<double>(g.size());
  const double n_i = static_cast<double>(im.size());

  RocCurve roc;
  roc.fpr.push_back(0.0);
  roc.tpr.push_back(0.0);
  roc.thresholds.push_back(std::numeric_limits<double>::infinity());
  std::size_t a = 0, b = 0;
  constexpr double kLow = -std::numeric_limits<double>::infinity();
  while (a < g.size() || b < im.size()) {
    const double t = std::max(a < g.size() ? g[a] : kLow, b < im.size() ? im[b] : kLow);
    while (a < g.size() && g[a] == t) ++a;
    while (b < im.size() && im[b] == t) ++b;
    roc.fpr.push_back(static_cast<double>(b) / n_i);
    roc.tpr.push_back(static_cast<double>(a) / n_g);
    roc.thresholds.push_back(t);
  }

  for (std::size_t j = 1; j < roc.fpr.size(); ++j)
    roc.auc += (roc.fpr[j] - roc.fpr[j - 1]) * (roc.tpr[j] + roc.tpr[j - 1]) / 2.0;

  // First point where FPR >= FNR, interpolated against its predecessor.
  for (std::size_t j = 1; j < roc.fpr.size(); ++j) {
    const double d1 = roc.fpr[j] - (1.0 - roc.tpr[j]);
    if (d1 < 0) continue;
    const double d0 = roc.fpr[j - 1] - (1.0 - roc.tpr[j - 1]);
    const double t = d1 == 0.0 ? 1.0 : -d0 / (d1 - d0);
    roc.eer = roc.fpr[j - 1] + t * (roc.fpr[j] - roc.fpr[j - 1]);
    break;
  }
  return roc;
}

std::vector<double> fuse_decisions(std::span<const double> scores, std::span<const ScoreKey> keys,
                                   int k) {
  if (k < 1) throw Error(ErrorCode::kInvalidArgument, "fusion level must be >= 1");
  if (!keys.empty() && keys.size() != scores.size())
    throw Error(ErrorCode::kInvalidArgument, "score/key size mismatch");
  if (k == 1) return {scores.begin(), scores.end()};
  std::vector<double> out;
  double sum = 0.0;
  int count = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (count > 0 && !keys.empty() && !(keys[i] == keys[i - 1])) {
      sum = 0.0;
      count = 0;
    }
    sum += scores[i];
    if (++count == k) {
      out.push_back(sum / k);
      sum = 0.0;
      count = 0;
    }
  }
  return out;
}

std::vector<double> fuse_decisions(std::span<const double> scores, int k) {
  return fuse_decisions(scores, {}, k);
}

EvalReport aggregate_report(std::span<const PairEvaluation> pairs,
                            std::span<const int> fusion_levels) {
  EvalReport report;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& pe : pairs) {
    PairMetrics pm;
    pm.user = pe.user;
    pm.attacker = pe.attacker;
    pm.shrunk = pe.shrunk;
    report.pairs.push_back(std::move(pm));
  }
  for (int k : fusion_levels) {
    LevelResult level;
    level.k = k;
    std::vector<double> pooled_g, pooled_i;
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      const auto g = fuse_decisions(pairs[p].genuine, pairs[p].genuine_keys, k);
      const auto im = fuse_decisions(pairs[p].impostor, pairs[p].impostor_keys, k);
      pooled_g.insert(pooled_g.end(), g.begin(), g.end());
      pooled_i.insert(pooled_i.end(), im.begin(), im.end());
      if (g.empty() || im.empty()) {
        report.pairs[p].auc.push_back(nan);
        report.pairs[p].eer.push_back(nan);
      } else {
        const RocCurve roc = compute_roc(g, im);
        report.pairs[p].auc.push_back(roc.auc);
        report.pairs[p].eer.push_back(roc.eer);
      }
    }
    level.n_genuine = pooled_g.size();
    level.n_impostor = pooled_i.size();
    if (!pooled_g.empty() && !pooled_i.empty()) {
      level.roc = compute_roc(pooled_g, pooled_i);
    } else {
      level.roc.auc = level.roc.eer = nan;
    }
    report.levels.push_back(std::move(level));
  }

  // Difficult pairs from the unfused (first) level.
  std::vector<double> eers;
  for (const auto& pm : report.pairs)
    if (!pm.eer.empty() && std::isfinite(pm.eer.front())) eers.push_back(pm.eer.front());
  if (!eers.empty()) {
    const double mean = std::accumulate(eers.begin(), eers.end(), 0.0) / eers.size();
    double var = 0.0;
    for (double e : eers) var += (e - mean) * (e - mean);
    const double sd = std::sqrt(var / eers.size());
    report.difficult_threshold = mean + 2.0 * sd;
    const auto hard = std::count_if(eers.begin(), eers.end(),
                                    [&](double e) { return e > report.difficult_threshold; });
    report.difficult_fraction = static_cast<double>(hard) / eers.size();
  }
  return report;
}

std::vector<std::string> eligible_subjects(const LabeledDataset& dataset, const ScenarioSpec& spec,
                                           std::vector<std::string>* excluded) {
  const DatasetIndex index = index_dataset(dataset);
  const auto days = spec.train_days();
  const int first_test = spec.first_test_day();
  std::vector<std::string> keep;
  for (const auto& [subject, by_day] : index) {
    bool ok = true;
    for (int d : days) ok = ok && by_day.count(d) && !by_day.at(d).empty();
    if (first_test > 0) {
      bool any_test = false;
      for (const auto& [day, rows] : by_day) any_test = any_test || (day >= first_test && !rows.empty());
      ok = ok && any_test;
    }
    if (ok) keep.push_back(subject);
    else if (excluded) excluded->push_back(subject);
  }
  return keep;
}

std::uint64_t subject_hash(std::string_view subject) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : subject) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

EvalReport run_evaluation(const EvalOptions& options, const LabeledDataset& dataset) {
  const auto start = std::chrono::steady_clock::now();
  std::vector<std::string> excluded;
  const auto subjects = eligible_subjects(dataset, options.scenario, &excluded);
  for (const auto& s : excluded)
    spdlog::warn("scenario {}: excluding {} (missing training or test days)",
                 to_string(options.scenario.variant), s);

  std::vector<std::pair<std::string, std::string>> todo;
  for (const auto& p : subjects)
    for (const auto& q : subjects)
      if (p != q) todo.emplace_back(p, q);

  std::vector<std::optional<PairEvaluation>> results(todo.size());
  std::vector<std::string> errors(todo.size());
  parallel_for(todo.size(), options.jobs, [&](std::size_t i) {
    const auto& [p, q] = todo[i];
    const std::uint64_t seed =
        derive_seed(options.seed, {subject_hash(p), subject_hash(q),
                                   static_cast<std::uint64_t>(options.scenario.variant)});
    try {
      results[i] = evaluate_pair(options.scenario, dataset, options.classifier, p, q, seed);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kInsufficientData && e.code() != ErrorCode::kMissingDay) throw;
      errors[i] = e.what();
    }
    spdlog::debug("pair {}/{} done", p, q);
  });

  std::vector<PairEvaluation> done;
  std::vector<FailedPair> failed;
  for (std::size_t i = 0; i < todo.size(); ++i) {
    if (results[i]) {
      done.push_back(std::move(*results[i]));
    } else {
      spdlog::warn("pair {}/{} skipped: {}", todo[i].first, todo[i].second, errors[i]);
      failed.push_back({todo[i].first, todo[i].second, errors[i]});
    }
  }
  EvalReport report = aggregate_report(done, options.scenario.fusion_levels);
  report.scenario = options.scenario.variant;
  report.classifier = kind_of(options.classifier);
  report.seed = options.seed;
  report.failed = std::move(failed);
  report.excluded_subjects = std::move(excluded);
  report.runtime_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

ClassifierConfig default_classifier(ModelKind kind, Scenario scenario) {
  switch (kind) {
    case ModelKind::kForest: return ForestConfig{};
    case ModelKind::kLinear: return LinearConfig{};
    case ModelKind::kMlp: {
      MlpConfig cfg;
      cfg.epochs = scenario == Scenario::kS1 ? 100 : 25;
      return cfg;
    }
  }
  return ForestConfig{};
}

void write_pairs_csv(std::ostream& out, const EvalReport& report) {
  out << "user,attacker,shrunk";
  for (const auto& level : report.levels) out << ",auc_k" << level.k << ",eer_k" << level.k;
  out << '\n';
  for (const auto& pm : report.pairs) {
    out << pm.user << ',' << pm.attacker << ',' << (pm.shrunk ? 1 : 0);
    for (std::size_t l = 0; l < pm.auc.size(); ++l)
      out << ',' << format_double(pm.auc[l]) << ',' << format_double(pm.eer[l]);
    out << '\n';
  }
}

void write_roc_csv(std::ostream& out, const LevelResult& level) {
  out << "threshold,fpr,tpr\n";
  for (std::size_t i = 0; i < level.roc.fpr.size(); ++i)
    out << format_double(level.roc.thresholds[i]) << ',' << format_double(level.roc.fpr[i]) << ','
        << format_double(level.roc.tpr[i]) << '\n';
}

void write_results_csv(std::ostream& out, std::span<const EvalReport> reports) {
  out << "scenario,classifier,k,heartbeats,auc,eer,n_genuine,n_impostor,pairs,failed_pairs,"
         "difficult_fraction,seed\n";
  for (const auto& r : reports)
    for (const auto& level : r.levels)
      out << to_string(r.scenario) << ',' << to_string(r.classifier) << ',' << level.k << ','
          << 3 * level.k << ',' << format_double(level.roc.auc) << ','
          << format_double(level.roc.eer) << ',' << level.n_genuine << ',' << level.n_impostor
          << ',' << r.pairs.size() << ',' << r.failed.size() << ','
          << format_double(r.difficult_fraction) << ',' << r.seed << '\n';
}

void write_summary(std::ostream& out, std::span<const EvalReport> reports) {
  out << "scenario  classifier  k  heartbeats  AUC     EER(%)\n";
  for (const auto& r : reports) {
    for (const auto& level : r.levels) {
      char line[128];
      std::snprintf(line, sizeof line, "%-9s %-11s %-2d %-11d %-7s %s\n",
                    std::string(to_string(r.scenario)).c_str(),
                    std::string(to_string(r.classifier)).c_str(), level.k, 3 * level.k,
                    fmt_fixed(level.roc.auc, 4).c_str(),
                    fmt_fixed(100.0 * level.roc.eer, 2).c_str());
      out << line;
    }
  }
  out << '\n';
  for (const auto& r : reports) {
    out << "scenario " << to_string(r.scenario) << ", " << to_string(r.classifier) << ", seed "
        << r.seed << ": " << r.pairs.size() << " pairs, " << r.failed.size() << " failed\n";
    out << "  difficult pairs: " << fmt_fixed(100.0 * r.difficult_fraction, 2)
        << "% (pair EER above " << fmt_fixed(100.0 * r.difficult_threshold, 2) << "%)\n";
    if (!r.excluded_subjects.empty()) {
      out << "  excluded subjects:";
      for (const auto& s : r.excluded_subjects) out << ' ' << s;
      out << '\n';
    }
    for (const auto& f : r.failed)
      out << "  failed " << f.user << '/' << f.attacker << ": " << f.reason << '\n';
  }
}

void write_report_files(const std::filesystem::path& dir, const EvalReport& report) {
  std::filesystem::create_directories(dir);
  auto open = [&](const std::string& name) {
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw Error(ErrorCode::kIo, "cannot write " + (dir / name).string());
    return f;
  };
  {
    auto f = open("pairs.csv");
    write_pairs_csv(f, report);
  }
  for (const auto& level : report.levels) {
    auto f = open("roc_k" + std::to_string(level.k) + ".csv");
    write_roc_csv(f, level);
  }
  const std::span<const EvalReport> one(&report, 1);
  {
    auto f = open("results.csv");
    write_results_csv(f, one);
  }
  auto f = open("summary.txt");
  write_summary(f, one);
}

}  // namespace ecgbench
