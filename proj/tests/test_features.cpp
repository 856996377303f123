#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "ecgbench/error.hpp"
#include "ecgbench/features.hpp"
#include "ecgbench/random.hpp"

using namespace ecgbench;

namespace {

CardiacCycle cycle_from_samples(int qr, int rs, Eigen::Index r, int fs = 256) {
  CardiacCycle c;
  c.points.r = {r, 1.0};
  c.points.q = Fiducial{r - qr, -0.2};
  c.points.s = Fiducial{r + rs, -0.3};
  c.intervals.qr = 1000.0 * qr / fs;
  c.intervals.rs = 1000.0 * rs / fs;
  c.intervals.qs = 1000.0 * (qr + rs) / fs;
  c.intervals.pq = 150;
  c.intervals.st = 200;
  c.complete = true;
  return c;
}

LabeledDataset toy_pool(int subjects, int days, int per_day) {
  std::vector<FeatureVector> v;
  for (int s = 0; s < subjects; ++s)
    for (int d = 1; d <= days; ++d)
      for (int i = 0; i < per_day; ++i) {
        FeatureVector fv;
        fv.schema = FeatureSchema::kFull;
        fv.values = Eigen::VectorXd::Constant(15, s * 100 + d * 10 + i * 1e-3);
        fv.label = {"S" + std::to_string(s), d, 28800.0 + i, 0};
        v.push_back(fv);
      }
  return LabeledDataset::from_vectors(v);
}

}  // namespace

TEST_CASE("window statistics from QR {10,12,14} samples") {
  std::vector<CardiacCycle> cycles = {cycle_from_samples(10, 10, 300),
                                      cycle_from_samples(12, 10, 500),
                                      cycle_from_samples(14, 10, 700)};
  const auto fv = compute_window_features(BeatWindow(cycles.data(), 3));
  CHECK(fv.values.size() == 15);
  CHECK(fv.values[0] == doctest::Approx(39.0625));       // QR_min
  CHECK(fv.values[1] == doctest::Approx(54.6875));       // QR_max
  CHECK(fv.values[2] == doctest::Approx(46.875));        // QR_mean
  CHECK(fv.values[3] == doctest::Approx(46.875));        // QR_median
  CHECK(fv.values[4] == doctest::Approx(std::sqrt(8.0 / 3.0) * 1000 / 256));  // QR_std
  CHECK(fv.values[9] == doctest::Approx(0.0));           // RS_std
}

TEST_CASE("three identical cycles") {
  std::vector<CardiacCycle> cycles(3, cycle_from_samples(9, 11, 400));
  const auto fv = compute_window_features(BeatWindow(cycles.data(), 3));
  for (int k = 0; k < 3; ++k) {
    const double v = fv.values[5 * k];
    for (int j = 1; j < 4; ++j) CHECK(fv.values[5 * k + j] == v);
    CHECK(fv.values[5 * k + 4] == 0.0);
  }
}

TEST_CASE("incomplete cycle in a window") {
  std::vector<CardiacCycle> cycles(3, cycle_from_samples(9, 11, 400));
  cycles[1].intervals.rs.reset();
  try {
    compute_window_features(BeatWindow(cycles.data(), 3));
    FAIL("expected");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kIncompleteCycle);
  }
}

TEST_CASE("N cycles give N-2 windows") {
  for (int n : {2, 3, 4, 17}) {
    std::vector<CardiacCycle> run;
    for (int i = 0; i < n; ++i) run.push_back(cycle_from_samples(9, 11, 100 + 200 * i));
    const auto w = run_windows(run, 1, 256, {"S01", 2, 100.0, 4});
    CHECK(w.size() == static_cast<std::size_t>(std::max(0, n - 2)));
    if (!w.empty()) {
      CHECK(w[0].label.t_start_s == doctest::Approx(100.0 + 100.0 / 256));
      CHECK(w[0].label.run == 4);
    }
  }
}

TEST_CASE("selection is a projection") {
  std::mt19937 rng(2);
  std::normal_distribution<double> n;
  const auto full_names = schema_names(FeatureSchema::kFull);
  const auto sel_names = schema_names(FeatureSchema::kSelected);
  for (int t = 0; t < 1000; ++t) {
    FeatureVector fv;
    fv.values.resize(15);
    for (auto& v : fv.values) v = n(rng);
    const auto s = select_features(fv);
    REQUIRE(s.values.size() == 9);
    for (int j = 0; j < 9; ++j) {
      const auto pos = std::find(full_names.begin(), full_names.end(), sel_names[j]) - full_names.begin();
      CHECK(s.values[j] == fv.values[pos]);
    }
    if (t == 0) CHECK_THROWS_AS(select_features(s), Error);
  }
}

TEST_CASE("allocate_evenly spreads and redistributes") {
  std::vector<std::size_t> supply = {100, 100, 100, 100, 100, 100, 100};
  auto a = allocate_evenly(supply, 700);
  for (auto v : a) CHECK(v == 100);
  supply = {5, 100, 100};
  a = allocate_evenly(supply, 90);
  CHECK(a[0] == 5);
  CHECK(a[1] + a[2] == 85);
  CHECK(std::max(a[1], a[2]) - std::min(a[1], a[2]) <= 1);
  supply = {3, 4};
  a = allocate_evenly(supply, 100);
  CHECK(a[0] == 3);
  CHECK(a[1] == 4);
}

TEST_CASE("sampling without replacement") {
  const auto s = sample_without_replacement(100, 40, 9);
  CHECK(s.size() == 40);
  CHECK(std::set<std::size_t>(s.begin(), s.end()).size() == 40);
  CHECK(std::is_sorted(s.begin(), s.end()));
  CHECK(s == sample_without_replacement(100, 40, 9));
  CHECK(sample_without_replacement(5, 10, 1).size() == 5);
}

TEST_CASE("composition targets") {
  const auto pool = toy_pool(2, 7, 150);
  const auto ds = compose_dataset(pool, 700, 4);
  const auto counts = ds.per_subject_counts();
  CHECK(counts.at("S0") == 700);
  CHECK(counts.at("S1") == 700);
  std::map<std::pair<std::string, int>, int> per_day;
  for (const auto& l : ds.labels) ++per_day[{l.subject_id, l.day_index}];
  for (const auto& [k, v] : per_day) CHECK(v == 100);
  CHECK(ds.shortfall.empty());

  const auto again = compose_dataset(pool, 700, 4);
  CHECK(again.features == ds.features);

  const auto short_ds = compose_dataset(pool, 5000, 4);
  CHECK(short_ds.per_subject_counts().at("S0") == 1050);
  CHECK(short_ds.shortfall.size() == 2);
}

TEST_CASE("composition at full scale: 50000 per participant") {
  const auto pool = toy_pool(2, 5, 10500);
  const auto ds = compose_dataset(pool, 50000, 1);
  CHECK(ds.per_subject_counts().at("S0") == 50000);
  CHECK(ds.per_subject_counts().at("S1") == 50000);
}

TEST_CASE("required subject with no windows") {
  const auto pool = toy_pool(2, 1, 5);
  const std::vector<std::string> req = {"S0", "S9"};
  try {
    compose_dataset(pool, 10, 1, req);
    FAIL("expected");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kEmptySubject);
  }
}

TEST_CASE("ranking: constant, duplicate and separating columns") {
  std::mt19937 rng(8);
  std::normal_distribution<double> n;
  std::vector<FeatureVector> v;
  for (int i = 0; i < 400; ++i) {
    FeatureVector fv;
    fv.values.resize(15);
    for (auto& x : fv.values) x = n(rng);
    const int subject = i % 2;
    fv.values[10] = subject * 10.0 + n(rng) * 0.1;  // QS_min separates
    fv.values[4] = 3.0;                             // constant
    fv.values[1] = fv.values[0];                    // duplicate
    fv.label = {subject ? "B" : "A", 1, static_cast<double>(i), 0};
    v.push_back(fv);
  }
  const auto ds = LabeledDataset::from_vectors(v);
  // exhaustive threshold check: column 10 alone splits the two subjects
  bool separable = false;
  for (Eigen::Index i = 0; i < ds.size() && !separable; ++i) {
    const double t = ds.features(i, 10);
    bool ok = true;
    for (Eigen::Index j = 0; j < ds.size(); ++j)
      ok = ok && ((ds.features(j, 10) <= t) == (ds.labels[j].subject_id == "A"));
    separable = ok;
  }
  REQUIRE(separable);

  const auto r = rank_features(ds, 3);
  CHECK(r.ranked.front().first == "QS_min");
  double total = 0;
  for (const auto& [name, imp] : r.ranked) {
    total += imp;
    if (name == "QR_std") CHECK(imp == 0.0);
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(r.constant[4]);
  CHECK(r.correlation(4, 0) == 0.0);
  CHECK(r.correlation(0, 1) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("feature CSV roundtrip") {
  auto ds = toy_pool(2, 2, 3);
  ds.features(0, 0) = 0.1 + 0.2;
  std::stringstream io;
  write_feature_csv(io, ds);
  const auto back = read_feature_csv(io);
  CHECK(back.schema == FeatureSchema::kFull);
  CHECK(back.features == ds.features);
  REQUIRE(back.labels.size() == ds.labels.size());
  CHECK(back.labels[5].subject_id == ds.labels[5].subject_id);
  CHECK(back.labels[5].t_start_s == ds.labels[5].t_start_s);

  std::stringstream sel;
  write_feature_csv(sel, select_features(ds));
  CHECK(read_feature_csv(sel).schema == FeatureSchema::kSelected);
}
