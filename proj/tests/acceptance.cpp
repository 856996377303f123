// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.
// Usage: acceptance <path to ecgbench cli>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <limits>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ecgbench/dsp.hpp"
#include "ecgbench/error.hpp"
#include "ecgbench/evaluation.hpp"
#include "ecgbench/models.hpp"
#include "ecgbench/parallel.hpp"
#include "ecgbench/pipeline.hpp"
#include "ecgbench/random.hpp"
#include "ecgbench/synth.hpp"

using namespace ecgbench;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// ---- 1: metric oracles ------------------------------------------------------

double auc_pairwise(const std::vector<double>& g, const std::vector<double>& im) {
  double s = 0;
  for (double a : g)
    for (double b : im) s += a > b ? 1.0 : (a == b ? 0.5 : 0.0);
  return s / (static_cast<double>(g.size()) * static_cast<double>(im.size()));
}

// Every threshold, rates counted directly, interpolated at the FPR = FNR crossing.
double eer_scan(const std::vector<double>& g, const std::vector<double>& im) {
  std::vector<double> ts(g);
  ts.insert(ts.end(), im.begin(), im.end());
  std::sort(ts.begin(), ts.end(), std::greater<>());
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
  ts.insert(ts.begin(), std::numeric_limits<double>::infinity());
  double pf = 0, pn = 1;
  for (double t : ts) {
    std::size_t fa = 0, fr = 0;
    for (double b : im) fa += b >= t;
    for (double a : g) fr += a < t;
    const double fpr = static_cast<double>(fa) / im.size();
    const double fnr = static_cast<double>(fr) / g.size();
    if (fpr >= fnr) {
      const double d0 = pf - pn, d1 = fpr - fnr;
      const double u = d1 == 0 ? 1.0 : -d0 / (d1 - d0);
      return pf + u * (fpr - pf);
    }
    pf = fpr;
    pn = fnr;
  }
  return 1.0;
}

Outcome metric_oracles() {
  const auto t0 = Clock::now();
  Rng rng(2024);
  std::uniform_int_distribution<int> size(2, 1000);
  std::normal_distribution<double> n;
  double worst_auc = 0, worst_eer = 0;
  for (int set = 0; set < 200; ++set) {
    const int total = size(rng);
    const int n_g = std::uniform_int_distribution<int>(1, total - 1)(rng);
    const double shift = std::uniform_real_distribution<double>(-1, 3)(rng);
    const bool coarse = set % 3 == 0;  // ties
    std::vector<double> g, im;
    for (int i = 0; i < total; ++i) {
      double v = n(rng) + (i < n_g ? shift : 0.0);
      if (coarse) v = std::round(v * 4) / 4;
      (i < n_g ? g : im).push_back(v);
    }
    const RocCurve roc = compute_roc(g, im);
    worst_auc = std::max(worst_auc, std::abs(roc.auc - auc_pairwise(g, im)));
    worst_eer = std::max(worst_eer, std::abs(roc.eer - eer_scan(g, im)));
  }
  const double dt = seconds_since(t0);
  return {worst_auc <= 1e-9 && worst_eer <= 1e-6 && dt < 10.0,
          fmt("max |AUC-oracle| %.2e, max |EER-scan| %.2e, %.2fs", worst_auc, worst_eer, dt)};
}

// ---- 2: filter ------------------------------------------------------------------

double dft_gain(const Eigen::VectorXd& h, double f, double fs) {
  double re = 0, im = 0;
  for (Eigen::Index k = 0; k < h.size(); ++k) {
    const double w = -2 * std::numbers::pi * f / fs * static_cast<double>(k);
    re += h[k] * std::cos(w);
    im += h[k] * std::sin(w);
  }
  return std::hypot(re, im);
}

Outcome filter_response() {
  const auto t0 = Clock::now();
  const auto f = design_fir_bandpass<double>(77, 3, 45, 256);
  const double dc = dft_gain(f.coefficients, 0, 256);
  const double g10 = dft_gain(f.coefficients, 10, 256);
  const double g20 = dft_gain(f.coefficients, 20, 256);
  const double g30 = dft_gain(f.coefficients, 30, 256);
  const double g50 = dft_gain(f.coefficients, 50, 256);
  const double dt = seconds_since(t0);
  const auto in_band = [](double g) { return g >= 0.95 && g <= 1.05; };
  return {f.taps() == 77 && dc <= 0.01 && in_band(g10) && in_band(g20) && in_band(g30) &&
              g50 <= 0.2 && dt < 1.0,
          fmt("DC %.4f, 10Hz %.4f, 20Hz %.4f, 30Hz %.4f, 50Hz %.4f, %.3fs", dc, g10, g20, g30, g50,
              dt)};
}

// ---- 3: detector --------------------------------------------------------------

struct Match {
  std::size_t tp = 0, fp = 0, fn = 0;
};

// Greedy one-to-one matching of sorted lists within `tol` samples.
Match match_peaks(const std::vector<Eigen::Index>& truth, const RPeakList& found, double tol) {
  Match m;
  std::size_t i = 0, j = 0;
  while (i < truth.size() && j < found.size()) {
    const double d = static_cast<double>(found[j] - truth[i]);
    if (std::abs(d) <= tol) {
      ++m.tp;
      ++i;
      ++j;
    } else if (d < 0) {
      ++m.fp;
      ++j;
    } else {
      ++m.fn;
      ++i;
    }
  }
  m.fn += truth.size() - i;
  m.fp += found.size() - j;
  return m;
}

std::pair<double, double> detector_scores(const synth::NoiseModel& noise) {
  synth::FieldWeekConfig cfg;
  cfg.n_subjects = 20;
  cfg.sample_rate = 256;
  cfg.day_duration_s = 600;
  cfg.noise = noise;
  cfg.seed = 31;
  const auto subjects = synth::corpus_subjects(cfg);
  const auto filter = design_fir_bandpass<double>(77, 3, 45, 256);
  DetectorConfig dc;
  dc.edge_margin = filter.group_delay();
  const double tol = 10.0 * 256 / 1000.0;
  Match total;
  for (const auto& p : subjects) {
    const auto sr = synth::generate_recording(p, 3, cfg);
    const auto peaks = detect_r_peaks(apply_fir(sr.recording.samples, filter), 256, dc);
    std::vector<Eigen::Index> truth;
    for (const auto& b : sr.truth.beats)
      if (b.r >= dc.edge_margin && b.r < sr.recording.size() - dc.edge_margin) truth.push_back(b.r);
    const Match m = match_peaks(truth, peaks, tol);
    total.tp += m.tp;
    total.fp += m.fp;
    total.fn += m.fn;
  }
  const double se = static_cast<double>(total.tp) / (total.tp + total.fn);
  const double ppv = static_cast<double>(total.tp) / (total.tp + total.fp);
  return {se, ppv};
}

Outcome detector_accuracy() {
  const auto t0 = Clock::now();
  const auto [se0, pp0] = detector_scores(synth::NoiseModel::none());
  synth::NoiseModel noisy;
  noisy.snr_db = 10.0;
  const auto [se10, pp10] = detector_scores(noisy);
  const double dt = seconds_since(t0);
  return {se0 >= 0.99 && pp0 >= 0.99 && se10 >= 0.90 && pp10 >= 0.90 && dt < 120.0,
          fmt("clean Se %.4f +P %.4f; 10 dB Se %.4f +P %.4f; %.1fs", se0, pp0, se10, pp10, dt)};
}

// ---- 4 and 5: pipeline trends on a drifting field week -----------------------

LabeledDataset field_week_features(const synth::FieldWeekConfig& cfg) {
  const auto corpus = synth::generate_corpus(cfg);
  std::vector<FeatureVector> windows;
  for (const auto& sr : corpus) {
    auto res = process_recording(sr.recording);
    std::move(res.windows.begin(), res.windows.end(), std::back_inserter(windows));
  }
  const auto full = LabeledDataset::from_vectors(windows);
  return compose_dataset(select_features(full), 50000, derive_seed(cfg.seed, {1}));
}

struct TrendData {
  std::map<Scenario, EvalReport> reports;
  std::map<Scenario, double> runtime;
  double prep_s = 0;
};

TrendData& trend_data() {
  static TrendData data = [] {
    TrendData d;
    const auto t0 = Clock::now();
    synth::FieldWeekConfig cfg;
    cfg.n_subjects = 10;
    cfg.noise.snr_db = 15.0;
    cfg.drift_scale = 1.0;
    cfg.seed = 20240601;
    const LabeledDataset ds = field_week_features(cfg);
    d.prep_s = seconds_since(t0);
    for (auto sc : {Scenario::kS1, Scenario::kS2a, Scenario::kS2b, Scenario::kS2c}) {
      const auto t1 = Clock::now();
      EvalOptions opt;
      opt.scenario = ScenarioSpec::make(sc);
      opt.classifier = default_classifier(ModelKind::kForest, sc);
      opt.seed = 77;
      opt.jobs = default_jobs();
      d.reports[sc] = run_evaluation(opt, ds);
      d.runtime[sc] = seconds_since(t1);
    }
    return d;
  }();
  return data;
}

Outcome fusion_trend() {
  const auto& d = trend_data();
  const auto& r = d.reports.at(Scenario::kS1);
  std::vector<double> eer;
  std::string text;
  for (const auto& l : r.levels) {
    eer.push_back(l.roc.eer);
    text += fmt(" k%d %.2f%%", l.k, 100 * l.roc.eer);
  }
  int violations = 0;
  bool small = true;
  for (std::size_t i = 1; i < eer.size(); ++i)
    if (eer[i] > eer[i - 1]) {
      ++violations;
      small = small && eer[i] - eer[i - 1] <= 0.005;
    }
  const double dt = d.prep_s + d.runtime.at(Scenario::kS1);
  const bool pass = eer.size() == 5 && eer[4] < eer[0] && violations <= 1 && small && dt < 300;
  return {pass, fmt("pooled EER%s; %d rise(s); %zu pairs; %.1fs", text.c_str(), violations,
                    r.pairs.size(), dt)};
}

Outcome scenario_trend() {
  const auto& d = trend_data();
  const auto eer = [&](Scenario s) { return d.reports.at(s).levels.front().roc.eer; };
  const double s1 = eer(Scenario::kS1), s2a = eer(Scenario::kS2a), s2b = eer(Scenario::kS2b),
               s2c = eer(Scenario::kS2c);
  const double tol = 0.005;
  double dt = d.prep_s;
  for (const auto& [sc, t] : d.runtime) dt += t;
  const bool pass = s1 <= s2a + tol && s2c <= s2b + tol && s2b <= s2a + tol && dt < 600;
  return {pass, fmt("EER S1 %.2f%%, S2a %.2f%%, S2b %.2f%%, S2c %.2f%%; %.1fs", 100 * s1,
                    100 * s2a, 100 * s2b, 100 * s2c, dt)};
}

// ---- 6: twins and far-apart subjects ----------------------------------------

Outcome floor_and_ceiling() {
  const auto t0 = Clock::now();
  synth::FieldWeekConfig cfg;
  cfg.noise.snr_db = 20.0;
  cfg.seed = 606;

  // Far pair: narrowest and widest QS span among candidate seeds.
  std::vector<synth::SubjectParams> pool;
  for (std::uint64_t s = 0; s < 40; ++s) pool.push_back(synth::generate_subject(derive_seed(cfg.seed, {s})));
  const auto [lo, hi] = std::minmax_element(pool.begin(), pool.end(), [](const auto& a, const auto& b) {
    return a.qs_span_ms() < b.qs_span_ms();
  });
  const double span_gap = hi->qs_span_ms() - lo->qs_span_ms();

  struct Member {
    std::string name;
    synth::SubjectParams params;
    std::uint64_t stream;
  };
  const auto twin = synth::generate_subject(derive_seed(cfg.seed, {1000}));
  std::vector<Member> members = {{"T1", twin, 0}, {"T2", twin, 1}, {"F1", *lo, 0}, {"F2", *hi, 0}};
  for (std::uint64_t r = 0; r < 4; ++r)
    members.push_back({"R" + std::to_string(r + 1),
                       synth::generate_subject(derive_seed(cfg.seed, {2000 + r})), 0});

  std::vector<std::vector<FeatureVector>> per(members.size() * 7);
  parallel_for(per.size(), default_jobs(), [&](std::size_t i) {
    const auto& m = members[i / 7];
    auto sr = synth::generate_recording(m.params, static_cast<int>(i % 7) + 1, cfg, m.stream);
    sr.recording.subject_id = m.name;
    per[i] = process_recording(sr.recording).windows;
  });
  std::vector<FeatureVector> windows;
  for (auto& v : per) std::move(v.begin(), v.end(), std::back_inserter(windows));
  const auto ds = select_features(LabeledDataset::from_vectors(windows));

  const auto spec = ScenarioSpec::make(Scenario::kS1);
  const auto cls = default_classifier(ModelKind::kForest, Scenario::kS1);
  const auto twin_pe = evaluate_pair(spec, ds, cls, "T1", "T2", 1);
  const auto far_pe = evaluate_pair(spec, ds, cls, "F1", "F2", 2);
  const double twin_eer = compute_roc(twin_pe.genuine, twin_pe.impostor).eer;
  const double far_eer = compute_roc(far_pe.genuine, far_pe.impostor).eer;
  return {twin_eer >= 0.30 && far_eer <= 0.10 && span_gap >= 20.0,
          fmt("twin pair EER %.3f; far pair (QS spans %.1f vs %.1f ms) EER %.3f; %.1fs", twin_eer,
              lo->qs_span_ms(), hi->qs_span_ms(), far_eer, seconds_since(t0))};
}

// ---- 7: protocol guards -------------------------------------------------------

LabeledDataset random_dataset(Rng& rng, int subjects, std::vector<std::vector<int>>& supply) {
  std::normal_distribution<double> n;
  std::vector<FeatureVector> v;
  supply.assign(subjects, std::vector<int>(7, 0));
  for (int s = 0; s < subjects; ++s)
    for (int d = 1; d <= 7; ++d) {
      // occasionally a day is missing or thin
      const int r = std::uniform_int_distribution<int>(0, 19)(rng);
      const int count = r == 0 ? 0 : (r == 1 ? 5 : std::uniform_int_distribution<int>(20, 400)(rng));
      supply[s][d - 1] = count;
      for (int i = 0; i < count; ++i) {
        FeatureVector fv;
        fv.schema = FeatureSchema::kSelected;
        fv.values.resize(9);
        for (auto& x : fv.values) x = n(rng) + s;
        fv.label = {"P" + std::to_string(s), d, 30000.0 + 2.0 * i, i / 40};
        v.push_back(fv);
      }
    }
  return LabeledDataset::from_vectors(v);
}

// Independent restatement of the protocol rules.
std::string audit(const Split& sp, const ScenarioSpec& spec) {
  const auto days = spec.train_days();
  std::set<std::tuple<int, double, int>> user_train;
  for (std::size_t i = 0; i < sp.train_labels.size(); ++i) {
    const auto& l = sp.train.labels[i];
    if (l.subject_id == sp.attacker) return "attacker in training";
    if (sp.train_labels[i] == 1) {
      if (l.subject_id != sp.user) return "foreign positive";
      if (!days.empty() && std::find(days.begin(), days.end(), l.day_index) == days.end())
        return "user train day " + std::to_string(l.day_index);
      user_train.emplace(l.day_index, l.t_start_s, l.run);
    } else if (l.subject_id == sp.user) {
      return "user in rest-of-world";
    }
  }
  for (std::size_t i = 0; i < sp.test_labels.size(); ++i) {
    const auto& l = sp.test.labels[i];
    if (sp.test_labels[i] == 1) {
      if (l.subject_id != sp.user) return "foreign genuine";
      if (!days.empty() && l.day_index <= days.back()) return "user test on a training day";
      if (user_train.count({l.day_index, l.t_start_s, l.run})) return "window reused";
    } else if (l.subject_id != sp.attacker) {
      return "impostor is not the attacker";
    }
  }
  return {};
}

Outcome protocol_guards() {
  const auto t0 = Clock::now();
  Rng rng(777);
  int built = 0, refused = 0, caught = 0;
  std::string problem;
  for (int cfg = 0; cfg < 100 && problem.empty(); ++cfg) {
    const int subjects = std::uniform_int_distribution<int>(3, 8)(rng);
    std::vector<std::vector<int>> supply;
    const auto ds = random_dataset(rng, subjects, supply);
    const auto sc = static_cast<Scenario>(cfg % 4);
    auto spec = ScenarioSpec::make(sc);
    const int p = std::uniform_int_distribution<int>(0, subjects - 1)(rng);
    int q = std::uniform_int_distribution<int>(0, subjects - 2)(rng);
    if (q >= p) ++q;
    Split sp;
    try {
      sp = build_split(spec, ds, "P" + std::to_string(p), "P" + std::to_string(q), rng());
    } catch (const Error& e) {
      // refusals are fine only for genuine shortages
      if (e.code() != ErrorCode::kInsufficientData && e.code() != ErrorCode::kMissingDay)
        problem = e.what();
      ++refused;
      continue;
    }
    ++built;
    if (auto why = audit(sp, spec); !why.empty()) {
      problem = "config " + std::to_string(cfg) + ": " + why;
      break;
    }
    try {
      check_split(sp, spec);
    } catch (const Error& e) {
      problem = std::string("guard rejected a valid split: ") + e.what();
      break;
    }
    // negative control: plant an attacker window in training
    Split bad = sp;
    const auto last = bad.train.size() - 1;
    bad.train.labels[last] = bad.test.labels.back();
    try {
      check_split(bad, spec);
    } catch (const Error& e) {
      caught += e.code() == ErrorCode::kProtocolViolation;
    }
  }
  const double dt = seconds_since(t0);
  return {problem.empty() && built >= 50 && caught == built,
          fmt("%d splits audited, %d refused for lack of data, %d/%d planted leaks caught%s; %.2fs",
              built, refused, caught, built, problem.empty() ? "" : (" - " + problem).c_str(), dt)};
}

// ---- 8: determinism ---------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

Outcome determinism(const std::string& cli) {
  const auto t0 = Clock::now();
  const fs::path root = fs::temp_directory_path() / "ecgbench_acceptance_det";
  fs::remove_all(root);
  auto run_all = [&](const std::string& tag, int jobs) {
    const std::string base = (root / tag).string();
    const std::string j = " --jobs " + std::to_string(jobs) + " --seed 1234";
    const std::vector<std::string> cmds = {
        cli + " synth --subjects 5 --duration 120 --snr 20" + j + " --out " + base + "/corpus",
        cli + " process --input " + base + "/corpus" + j + " --out " + base + "/features",
        cli + " evaluate --input " + base + "/features --scenario 1 --fusion 5" + j + " --out " +
            base + "/report"};
    for (const auto& c : cmds)
      if (std::system((c + " 2>/dev/null").c_str()) != 0) return false;
    return true;
  };
  if (!run_all("a", 1) || !run_all("b", 4)) return {false, "a pipeline stage failed"};
  int compared = 0, differing = 0;
  for (const char* stage : {"corpus", "features", "report"}) {
    for (const auto& e : fs::directory_iterator(root / "a" / stage)) {
      const auto name = e.path().filename().string();
      if (name == "config.ini") continue;  // records --jobs and --out
      ++compared;
      if (slurp(e.path()) != slurp(root / "b" / stage / name)) ++differing;
    }
  }
  const bool pass = differing == 0 && compared > 10 && fs::exists(root / "a/report/summary.txt");
  fs::remove_all(root);
  return {pass, fmt("%d files compared between --jobs 1 and --jobs 4, %d differ; %.1fs", compared,
                    differing, seconds_since(t0))};
}

// ---- 9: split sizes -------------------------------------------------------------

Outcome split_sizes() {
  Rng rng(9);
  std::normal_distribution<double> n;
  std::vector<FeatureVector> v;
  for (int s = 0; s < 6; ++s)
    for (int d = 1; d <= 7; ++d)
      for (int i = 0; i < 2100; ++i) {
        FeatureVector fv;
        fv.schema = FeatureSchema::kSelected;
        fv.values = Eigen::VectorXd::Constant(9, s + n(rng));
        fv.label = {"P" + std::to_string(s), d, 1.0 * i, 0};
        v.push_back(fv);
      }
  const auto ds = LabeledDataset::from_vectors(v);
  auto counts = [](const Split& sp) {
    const auto pos = [](const std::vector<int>& y) { return std::count(y.begin(), y.end(), 1); };
    return std::array<long, 4>{pos(sp.train_labels),
                               static_cast<long>(sp.train_labels.size()) - pos(sp.train_labels),
                               pos(sp.test_labels),
                               static_cast<long>(sp.test_labels.size()) - pos(sp.test_labels)};
  };
  const auto s1 = counts(build_split(ScenarioSpec::make(Scenario::kS1), ds, "P0", "P1", 5));
  const auto s2 = counts(build_split(ScenarioSpec::make(Scenario::kS2a), ds, "P0", "P1", 5));
  const bool pass = s1 == std::array<long, 4>{4000, 4000, 1000, 1000} &&
                    s2 == std::array<long, 4>{2000, 2000, 500, 500};
  return {pass, fmt("S1 train %ld+%ld test %ld+%ld; S2a train %ld+%ld test %ld+%ld", s1[0], s1[1],
                    s1[2], s1[3], s2[0], s2[1], s2[2], s2[3])};
}

// ---- 10: MLP gradients --------------------------------------------------------

Outcome mlp_gradients() {
  Rng rng(10);
  std::normal_distribution<double> n;
  double worst = 0;
  const std::vector<int> hidden = {32, 32, 32};
  for (int net_i = 0; net_i < 20; ++net_i) {
    MlpModel net = MlpModel::init(9, hidden, derive_seed(10, {static_cast<std::uint64_t>(net_i)}));
    // non-zero biases so every parameter group is exercised
    for (auto& b : net.biases)
      for (auto& x : b) x = 0.1 * n(rng);
    Eigen::MatrixXd x(8, 9);
    std::vector<int> y;
    for (int i = 0; i < 8; ++i) {
      for (int j = 0; j < 9; ++j) x(i, j) = n(rng);
      y.push_back(std::uniform_int_distribution<int>(0, 1)(rng));
    }
    const Eigen::VectorXd g = mlp_loss_and_gradient(net, x, y).flat();
    const Eigen::VectorXd theta = net.flat_parameters();
    Eigen::VectorXd fd(theta.size());
    const double h = 1e-6;
    for (Eigen::Index k = 0; k < theta.size(); ++k) {
      Eigen::VectorXd t = theta;
      t[k] += h;
      net.set_flat_parameters(t);
      const double up = mlp_loss_and_gradient(net, x, y).loss;
      t[k] -= 2 * h;
      net.set_flat_parameters(t);
      const double down = mlp_loss_and_gradient(net, x, y).loss;
      fd[k] = (up - down) / (2 * h);
    }
    net.set_flat_parameters(theta);
    worst = std::max(worst, (g - fd).norm() / std::max(g.norm(), fd.norm()));
  }
  return {worst <= 1e-4, fmt("worst relative error %.2e over 20 nets (9-32-32-32-1)", worst)};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: acceptance <ecgbench cli>\n");
    return 2;
  }
  const std::string cli = argv[1];
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"1 metric oracles", metric_oracles},
      {"2 filter response", filter_response},
      {"3 detector accuracy", detector_accuracy},
      {"4 fusion trend", fusion_trend},
      {"5 scenario trend", scenario_trend},
      {"6 twin floor / far ceiling", floor_and_ceiling},
      {"7 protocol guards", protocol_guards},
      {"8 determinism", [&] { return determinism(cli); }},
      {"9 split sizes", split_sizes},
      {"10 mlp gradient check", mlp_gradients},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("[%s] %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed == 0 ? 0 : 1;
}
