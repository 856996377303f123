// ecgbench: synth / ingest / process / evaluate / report.
#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "ecgbench/edf.hpp"
#include "ecgbench/error.hpp"
#include "ecgbench/evaluation.hpp"
#include "ecgbench/features.hpp"
#include "ecgbench/parallel.hpp"
#include "ecgbench/pipeline.hpp"
#include "ecgbench/random.hpp"
#include "ecgbench/synth.hpp"

namespace fs = std::filesystem;
using namespace ecgbench;

namespace {

struct Common {
  std::uint64_t seed = 42;
  std::size_t jobs = default_jobs();
  std::string out;
};

struct SynthArgs {
  int subjects = 20;
  int days = 7;
  double duration_s = 600.0;
  int rate = 1024;
  std::optional<double> snr_db;
  double powerline_mv = 0.05;
  double wander_mv = 0.1;
  int gaps = 0;
  double gap_length_s = 30.0;
  double drift = 1.0;
};

struct ProcessArgs {
  std::string input;
  PipelineConfig pipeline;
};

struct EvaluateArgs {
  std::string input;
  std::string scenario = "1";
  std::string classifier = "forest";
  int fusion = 5;
  std::string schema = "selected";
  std::size_t per_subject = 50000;
  int trees = 100;
  double c = 1e-3;
  int epochs = 0;  // 0: 100 for scenario 1, 25 otherwise
};

struct ReportArgs {
  std::vector<std::string> inputs;
};

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("ecgbench");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::info);
  if (const char* env = std::getenv("ECGBENCH_LOG")) {
    const auto level = spdlog::level::from_str(env);
    if (level == spdlog::level::off && std::string(env) != "off")
      spdlog::warn("ECGBENCH_LOG='{}' not recognised, keeping info", env);
    else
      spdlog::set_level(level);
  }
}

fs::path require_out(const Common& common) {
  if (common.out.empty()) throw CLI::ValidationError("--out", "an output directory is required");
  fs::path out(common.out);
  fs::create_directories(out);
  return out;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  return f;
}

void write_snapshot(const CLI::App& app, const fs::path& out) {
  auto f = open_out(out / "config.ini");
  f << app.config_to_str(true, false);
}

// Lists every file under `out` so a run's outputs can be checked at a glance.
void write_output_manifest(const fs::path& out) {
  std::vector<std::string> names;
  for (const auto& e : fs::recursive_directory_iterator(out))
    if (e.is_regular_file()) names.push_back(fs::relative(e.path(), out).generic_string());
  std::sort(names.begin(), names.end());
  auto f = open_out(out / "outputs.txt");
  for (const auto& n : names)
    if (n != "outputs.txt") f << n << '\n';
}

std::vector<fs::path> collect_edf_inputs(const fs::path& input) {
  std::vector<fs::path> paths;
  if (!fs::exists(input)) throw Error(ErrorCode::kIo, "input not found: " + input.string());
  fs::path manifest;
  if (fs::is_regular_file(input) && input.extension() == ".csv") manifest = input;
  else if (fs::is_directory(input) && fs::exists(input / "manifest.csv")) manifest = input / "manifest.csv";

  if (!manifest.empty()) {
    const auto m = synth::read_manifest(manifest);
    for (const auto& e : m.entries) paths.push_back(m.root / e.edf);
  } else if (fs::is_directory(input)) {
    for (const auto& e : fs::directory_iterator(input))
      if (e.is_regular_file() && e.path().extension() == ".edf") paths.push_back(e.path());
    std::sort(paths.begin(), paths.end());
  } else {
    paths.push_back(input);
  }
  if (paths.empty()) throw Error(ErrorCode::kIo, "no EDF recordings in " + input.string());
  return paths;
}

int cmd_synth(const CLI::App& app, const Common& common, const SynthArgs& a) {
  const fs::path out = require_out(common);
  synth::FieldWeekConfig cfg;
  cfg.n_subjects = a.subjects;
  cfg.n_days = a.days;
  cfg.day_duration_s = a.duration_s;
  cfg.sample_rate = a.rate;
  cfg.noise.snr_db = a.snr_db;
  cfg.noise.powerline_mv = a.powerline_mv;
  cfg.noise.wander_mv = a.wander_mv;
  cfg.gaps.count = a.gaps;
  cfg.gaps.length_s = a.gap_length_s;
  cfg.drift_scale = a.drift;
  cfg.seed = common.seed;
  const auto manifest = synth::generate_field_week(cfg, out, common.jobs);
  spdlog::info("wrote {} recordings to {}", manifest.entries.size(), out.string());
  write_snapshot(app, out);
  write_output_manifest(out);
  return 0;
}

int cmd_ingest(const CLI::App& app, const Common& common, const std::string& input) {
  const fs::path out = require_out(common);
  const auto paths = collect_edf_inputs(input);
  auto log = open_out(out / "ingest_log.csv");
  log << "file,status,subject,day,sample_rate,samples,invalid_fraction\n";
  std::size_t ok = 0;
  for (const auto& p : paths) {
    try {
      const auto rec = edf::read_edf_file(p);
      const auto invalid = std::count(rec.validity.begin(), rec.validity.end(), 0);
      log << p.filename().string() << ",ok," << rec.subject_id << ',' << rec.day_index << ','
          << rec.sample_rate << ',' << rec.size() << ','
          << format_double(rec.size() ? static_cast<double>(invalid) / rec.size() : 0.0) << '\n';
      ++ok;
    } catch (const Error& e) {
      spdlog::error("{}: {}", p.string(), e.what());
      log << p.filename().string() << ',' << to_string(e.code()) << ",,,,,\n";
    }
  }
  log.close();
  write_snapshot(app, out);
  write_output_manifest(out);
  spdlog::info("{} of {} recordings readable", ok, paths.size());
  return ok == 0 ? 2 : 0;
}

int cmd_process(const CLI::App& app, const Common& common, const ProcessArgs& a) {
  const fs::path out = require_out(common);
  const auto paths = collect_edf_inputs(a.input);

  struct Outcome {
    std::optional<ProcessResult> result;
    std::string subject;
    int day = 0;
    std::string error;
  };
  std::vector<Outcome> outcomes(paths.size());
  parallel_for(paths.size(), common.jobs, [&](std::size_t i) {
    try {
      const auto rec = edf::read_edf_file(paths[i]);
      outcomes[i].subject = rec.subject_id.empty() ? paths[i].stem().string() : rec.subject_id;
      outcomes[i].day = rec.day_index;
      outcomes[i].result = process_recording(rec, a.pipeline);
      if (rec.subject_id.empty())
        for (auto& w : outcomes[i].result->windows) w.label.subject_id = outcomes[i].subject;
    } catch (const Error& e) {
      outcomes[i].error = e.what();
    }
  });

  auto log = open_out(out / "process_log.csv");
  log << "file,subject,day,status,samples,invalid_fraction,episodes,beats,cycles,outliers,runs,"
         "windows\n";
  std::map<std::string, std::vector<FeatureVector>> by_subject;
  std::size_t ok = 0;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    const auto& o = outcomes[i];
    log << paths[i].filename().string() << ',' << o.subject << ',' << o.day << ',';
    if (!o.result) {
      spdlog::error("{}: {}", paths[i].string(), o.error);
      log << "failed,,,,,,,,\n";
      continue;
    }
    ++ok;
    const auto& s = o.result->stats;
    log << "ok," << s.samples << ','
        << format_double(s.samples ? static_cast<double>(s.invalid_samples) / s.samples : 0.0)
        << ',' << s.episodes << ',' << s.beats << ',' << s.cycles << ',' << s.outliers << ','
        << s.runs << ',' << s.windows << '\n';
    auto& dst = by_subject[o.subject];
    dst.insert(dst.end(), o.result->windows.begin(), o.result->windows.end());
  }
  log.close();
  if (ok == 0) throw Error(ErrorCode::kIo, "every input failed under " + a.input);

  for (const auto& [subject, windows] : by_subject) {
    auto f = open_out(out / ("features_" + subject + ".csv"));
    if (windows.empty()) {
      spdlog::warn("{}: no windows", subject);
      LabeledDataset empty;
      write_feature_csv(f, empty);
      continue;
    }
    write_feature_csv(f, LabeledDataset::from_vectors(windows));
  }
  spdlog::info("processed {} of {} recordings, {} subjects", ok, paths.size(), by_subject.size());
  write_snapshot(app, out);
  write_output_manifest(out);
  return 0;
}

LabeledDataset load_features(const fs::path& input) {
  std::vector<fs::path> files;
  if (fs::is_directory(input)) {
    for (const auto& e : fs::directory_iterator(input)) {
      const auto name = e.path().filename().string();
      if (e.is_regular_file() && name.rfind("features_", 0) == 0 && e.path().extension() == ".csv")
        files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
  } else if (fs::is_regular_file(input)) {
    files.push_back(input);
  }
  if (files.empty()) throw Error(ErrorCode::kIo, "no feature CSVs in " + input.string());
  LabeledDataset all;
  for (const auto& f : files) {
    std::ifstream in(f, std::ios::binary);
    if (!in) throw Error(ErrorCode::kIo, "cannot open " + f.string());
    all.append(read_feature_csv(in));
  }
  return all;
}

int cmd_evaluate(const CLI::App& app, const Common& common, const EvaluateArgs& a) {
  const fs::path out = require_out(common);
  LabeledDataset pool = load_features(a.input);
  if (pool.size() == 0) throw Error(ErrorCode::kInsufficientData, "feature files hold no windows");

  // Ranking runs on the full schema when available.
  if (pool.schema == FeatureSchema::kFull) {
    const auto ranking = rank_features(pool, derive_seed(common.seed, {0xfea7}));
    auto f = open_out(out / "feature_ranking.csv");
    f << "feature,importance\n";
    for (const auto& [name, imp] : ranking.ranked) f << name << ',' << format_double(imp) << '\n';
    auto g = open_out(out / "feature_correlation.csv");
    const auto names = schema_names(pool.schema);
    g << "feature";
    for (auto n : names) g << ',' << n;
    g << '\n';
    for (Eigen::Index i = 0; i < ranking.correlation.rows(); ++i) {
      g << names[static_cast<std::size_t>(i)];
      for (Eigen::Index j = 0; j < ranking.correlation.cols(); ++j)
        g << ',' << format_double(ranking.correlation(i, j));
      g << '\n';
    }
  }
  const FeatureSchema schema = parse_schema(a.schema);
  if (schema != pool.schema) pool = select_features(pool);

  LabeledDataset data = compose_dataset(pool, a.per_subject, derive_seed(common.seed, {0xc0de}));
  for (const auto& s : data.shortfall)
    spdlog::debug("{} has fewer than {} windows, keeping all", s, a.per_subject);

  const Scenario scenario = parse_scenario(a.scenario);
  EvalOptions opt;
  opt.scenario = ScenarioSpec::make(scenario, common.seed);
  opt.scenario.fusion_levels.clear();
  for (int k = 1; k <= a.fusion; ++k) opt.scenario.fusion_levels.push_back(k);
  opt.classifier = default_classifier(parse_model_kind(a.classifier), scenario);
  if (auto* f = std::get_if<ForestConfig>(&opt.classifier)) f->n_trees = a.trees;
  if (auto* l = std::get_if<LinearConfig>(&opt.classifier)) l->c = a.c;
  if (auto* m = std::get_if<MlpConfig>(&opt.classifier); m && a.epochs > 0) m->epochs = a.epochs;
  opt.seed = common.seed;
  opt.jobs = common.jobs;

  const EvalReport report = run_evaluation(opt, data);
  write_report_files(out, report);
  spdlog::info("scenario {} {}: {} pairs in {:.1f}s", to_string(scenario), a.classifier,
               report.pairs.size(), report.runtime_s);
  for (const auto& level : report.levels)
    spdlog::info("  k={} AUC {:.4f} EER {:.2f}%", level.k, level.roc.auc, 100 * level.roc.eer);
  write_snapshot(app, out);
  write_output_manifest(out);
  return report.pairs.empty() ? 2 : 0;
}

// Merges results.csv files from several evaluate runs into one table.
int cmd_report(const CLI::App& app, const Common& common, const ReportArgs& a) {
  const fs::path out = require_out(common);
  std::string header;
  std::vector<std::string> rows;
  for (const auto& dir : a.inputs) {
    const fs::path p = fs::is_directory(dir) ? fs::path(dir) / "results.csv" : fs::path(dir);
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error(ErrorCode::kIo, "cannot open " + p.string());
    std::string line;
    std::getline(in, line);
    if (header.empty()) header = line;
    else if (line != header) throw Error(ErrorCode::kInvalidArgument, "mismatched header in " + p.string());
    while (std::getline(in, line))
      if (!line.empty()) rows.push_back(line);
  }
  {
    auto f = open_out(out / "results.csv");
    f << header << '\n';
    for (const auto& r : rows) f << r << '\n';
  }
  // scenario x classifier table with AUC / EER per fusion level
  std::ostringstream table;
  table << "scenario  classifier  k  heartbeats  AUC     EER(%)\n";
  for (const auto& r : rows) {
    std::vector<std::string> c;
    std::stringstream ss(r);
    for (std::string cell; std::getline(ss, cell, ',');) c.push_back(cell);
    if (c.size() < 6) continue;
    char line[160];
    std::snprintf(line, sizeof line, "%-9s %-11s %-2s %-11s %-7.4f %.2f\n", c[0].c_str(),
                  c[1].c_str(), c[2].c_str(), c[3].c_str(), std::atof(c[4].c_str()),
                  100.0 * std::atof(c[5].c_str()));
    table << line;
  }
  auto f = open_out(out / "summary.txt");
  f << table.str();
  std::cout << table.str();
  write_snapshot(app, out);
  write_output_manifest(out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"ECG biometric authentication benchmark"};
  app.set_config("--config", "", "INI/TOML file with option values; flags override it");
  app.require_subcommand(1);
  app.fallthrough();

  Common common;
  app.add_option("--seed", common.seed, "Master seed")->capture_default_str();
  app.add_option("--jobs", common.jobs, "Worker threads")->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_option("--out", common.out, "Output directory");

  SynthArgs sa;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic field-week corpus");
  synth_cmd->add_option("--subjects", sa.subjects)->capture_default_str()->check(CLI::PositiveNumber);
  synth_cmd->add_option("--days", sa.days)->capture_default_str()->check(CLI::PositiveNumber);
  synth_cmd->add_option("--duration", sa.duration_s, "Seconds per full day")->capture_default_str();
  synth_cmd->add_option("--rate", sa.rate, "Sample rate (Hz)")->capture_default_str();
  synth_cmd->add_option("--snr", sa.snr_db, "Broadband noise SNR (dB); omit for none");
  synth_cmd->add_option("--powerline", sa.powerline_mv, "50 Hz amplitude (mV)")->capture_default_str();
  synth_cmd->add_option("--wander", sa.wander_mv, "Baseline wander amplitude (mV)")->capture_default_str();
  synth_cmd->add_option("--gaps", sa.gaps, "Tracker-off gaps per recording")->capture_default_str();
  synth_cmd->add_option("--gap-length", sa.gap_length_s, "Gap length (s)")->capture_default_str();
  synth_cmd->add_option("--drift", sa.drift, "Day drift scale, 0 disables")->capture_default_str();

  std::string ingest_input;
  auto* ingest_cmd = app.add_subcommand("ingest", "Read EDF files and log what they hold");
  ingest_cmd->add_option("--input", ingest_input, "Manifest, EDF directory or file")->required();

  ProcessArgs pa;
  auto& pc = pa.pipeline;
  auto* process_cmd = app.add_subcommand("process", "Recordings to per-subject feature CSVs");
  process_cmd->add_option("--input", pa.input, "Manifest, EDF directory or file")->required();
  process_cmd->add_option("--target-fs", pc.target_fs)->capture_default_str();
  process_cmd->add_option("--taps", pc.filter_taps)->capture_default_str();
  process_cmd->add_option("--band-low", pc.band_low_hz)->capture_default_str();
  process_cmd->add_option("--band-high", pc.band_high_hz)->capture_default_str();
  process_cmd->add_option("--min-episode", pc.min_episode_s, "Seconds")->capture_default_str();
  process_cmd->add_option("--sigma", pc.outlier_sigma)->capture_default_str();
  process_cmd->add_option("--stride", pc.window_stride)->capture_default_str();

  EvaluateArgs ea;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Pair-wise authentication evaluation");
  evaluate_cmd->add_option("--input", ea.input, "Directory of feature CSVs")->required();
  evaluate_cmd->add_option("--scenario", ea.scenario)->capture_default_str()
      ->check(CLI::IsMember({"1", "2a", "2b", "2c"}));
  evaluate_cmd->add_option("--classifier", ea.classifier)->capture_default_str()
      ->check(CLI::IsMember({"forest", "linear", "mlp"}));
  evaluate_cmd->add_option("--fusion", ea.fusion, "Highest fusion level")->capture_default_str()
      ->check(CLI::Range(1, 5));
  evaluate_cmd->add_option("--schema", ea.schema)->capture_default_str()
      ->check(CLI::IsMember({"full", "selected"}));
  evaluate_cmd->add_option("--per-subject", ea.per_subject, "Windows kept per subject")
      ->capture_default_str();
  evaluate_cmd->add_option("--trees", ea.trees)->capture_default_str();
  evaluate_cmd->add_option("--c", ea.c, "Linear SVM C")->capture_default_str();
  evaluate_cmd->add_option("--epochs", ea.epochs, "MLP epochs (0: by scenario)")->capture_default_str();

  ReportArgs ra;
  auto* report_cmd = app.add_subcommand("report", "Merge results of several evaluate runs");
  report_cmd->add_option("--input", ra.inputs, "Evaluate output directories")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*synth_cmd) return cmd_synth(app, common, sa);
    if (*ingest_cmd) return cmd_ingest(app, common, ingest_input);
    if (*process_cmd) return cmd_process(app, common, pa);
    if (*evaluate_cmd) return cmd_evaluate(app, common, ea);
    if (*report_cmd) return cmd_report(app, common, ra);
  } catch (const CLI::ValidationError& e) {
    std::cerr << e.what() << '\n';
    return 1;
  } catch (const Error& e) {
    spdlog::error("{} ({})", e.what(), to_string(e.code()));
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    spdlog::error("{}", e.what());
    return 2;
  } catch (const std::exception& e) {
    spdlog::error("internal error: {}", e.what());
    return 3;
  }
  return 1;
}
