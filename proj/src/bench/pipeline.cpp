#include "gr/bench/pipeline.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <functional>
#include <nlohmann/json.hpp>
#include <sstream>

#include "gr/bench/datasets.hpp"
#include "gr/bench/text.hpp"
#include "gr/cnn/model_io.hpp"
#include "gr/error.hpp"

namespace gr::bench {

namespace fs = std::filesystem;
using guidance::Metric;

namespace files {
std::string scores(Metric metric) { return "scores-" + std::string(guidance::to_string(metric)) + ".csv"; }
std::string ordering(Metric metric) { return "ordering-" + std::string(guidance::to_string(metric)) + ".csv"; }
}  // namespace files

namespace {

struct DataFiles {
  const char* images;
  const char* labels;
};
constexpr DataFiles kTrainFiles{"data/train-images.idx", "data/train-labels.idx"};
constexpr DataFiles kTestFiles{"data/test-images.idx", "data/test-labels.idx"};
constexpr DataFiles kAdvTrainFiles{"data/adv-train-images.idx", "data/adv-train-labels.idx"};
constexpr DataFiles kAdvTestFiles{"data/adv-test-images.idx", "data/adv-test-labels.idx"};

void save_data(const ExperimentConfig& cfg, const cnn::Dataset& data, DataFiles f) {
  fs::create_directories(cfg.output / "data");
  write_idx_dataset(data, cfg.output / f.images, cfg.output / f.labels);
}

cnn::Dataset load_data(const ExperimentConfig& cfg, DataFiles f, std::size_t classes) {
  return load_idx_dataset(cfg.output / f.images, cfg.output / f.labels, classes);
}

cnn::ModelState load_original(const ExperimentConfig& cfg) { return cnn::load_model(cfg.output / files::kModel); }

adversary::AugmentedSets load_sets(const ExperimentConfig& cfg, const cnn::ModelState& model) {
  const std::size_t classes = model.arch.classes;
  const auto train = load_data(cfg, kTrainFiles, classes);
  const auto test = load_data(cfg, kTestFiles, classes);
  adversary::AdversarialBatch adv_train{load_data(cfg, kAdvTrainFiles, classes), {}};
  adversary::AdversarialBatch adv_test{load_data(cfg, kAdvTestFiles, classes), {}};
  std::istringstream in(read_text(cfg.output / files::kProvenance));
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != 3) fail(ErrorCode::kInvalidArgument, "malformed provenance row '" + line + "'");
    auto& target = cells[0] == "adv_train" ? adv_train.source_index : adv_test.source_index;
    if (parse_u64(cells[1]) != target.size()) fail(ErrorCode::kInvalidArgument, "provenance rows out of order");
    target.push_back(parse_u64(cells[2]));
  }
  return adversary::assemble_augmented_sets(train, test, std::move(adv_train), std::move(adv_test));
}

void save_sets(const ExperimentConfig& cfg, const adversary::AugmentedSets& sets) {
  save_data(cfg, sets.adv_train, kAdvTrainFiles);
  save_data(cfg, sets.adv_test, kAdvTestFiles);
  std::string text = "set,adversarial_row,source_row\n";
  for (std::size_t k = 0; k < sets.adv_train_source.size(); ++k) {
    text += "adv_train," + std::to_string(k) + "," + std::to_string(sets.adv_train_source[k]) + "\n";
  }
  for (std::size_t k = 0; k < sets.adv_test_source.size(); ++k) {
    text += "adv_test," + std::to_string(k) + "," + std::to_string(sets.adv_test_source[k]) + "\n";
  }
  write_text(cfg.output / files::kProvenance, text);
}

void save_metrics(const ExperimentConfig& cfg, const std::map<Metric, MetricResult>& metrics) {
  std::vector<TimingRow> timing;
  for (Metric m : cfg.metrics) {
    const auto& r = metrics.at(m);
    std::ostringstream scores;
    guidance::write_scores_csv(scores, r.scores);
    write_text(cfg.output / files::scores(m), scores.str());
    std::string order = "input_id\n";
    for (std::size_t id : r.order) order += std::to_string(id) + "\n";
    write_text(cfg.output / files::ordering(m), order);
    timing.push_back({cfg.dataset_name, m, r.seconds});
  }
  write_text(cfg.output / files::kTiming, render_timing_csv(timing));
}

std::map<Metric, MetricResult> load_metrics(const ExperimentConfig& cfg) {
  std::map<Metric, MetricResult> out;
  const auto timing = parse_timing_csv(read_text(cfg.output / files::kTiming));
  for (Metric m : cfg.metrics) {
    MetricResult r;
    std::istringstream scores(read_text(cfg.output / files::scores(m)));
    r.scores = guidance::read_scores_csv(scores);
    std::istringstream order(read_text(cfg.output / files::ordering(m)));
    std::string line;
    std::getline(order, line);
    while (std::getline(order, line)) {
      if (!line.empty()) r.order.push_back(parse_u64(line));
    }
    for (const auto& t : timing) {
      if (t.metric == m) r.seconds = t.seconds;
    }
    out.emplace(m, std::move(r));
  }
  return out;
}

void save_points(const ExperimentConfig& cfg, const std::vector<retrainer::ExperimentRecord>& records) {
  write_text(cfg.output / files::kPoints, render_points_csv(point_rows(cfg.dataset_name, records)));
}

void with_manifest(const ExperimentConfig& cfg, const std::string& stage, const std::function<void()>& body) {
  fs::create_directories(cfg.output);
  try {
    body();
  } catch (const std::exception& e) {
    try {
      write_manifest(cfg, "failed", stage, e.what());
    } catch (...) {
    }
    throw;
  }
  write_manifest(cfg, "ok", stage);
}

ReportBundle report_from_files(const ExperimentConfig& cfg) {
  ReportBundle bundle;
  bundle.root = cfg.output;
  bundle.points = cfg.output / files::kPoints;
  bundle.summary = cfg.output / files::kSummary;
  bundle.comparison = cfg.output / files::kComparison;
  bundle.timing = cfg.output / files::kTiming;
  bundle.manifest = cfg.output / files::kManifest;

  const std::string points_text = read_text(bundle.points);
  const auto rows = parse_points_csv(points_text);
  if (render_points_csv(rows) != points_text) {
    fail(ErrorCode::kInvalidArgument, "per-point CSV does not round-trip");
  }
  parse_timing_csv(read_text(bundle.timing));
  write_text(bundle.summary, render_summary_csv(rows));
  write_text(bundle.comparison, render_comparison_csv(rows));
  for (auto kind : cfg.configs) {
    const auto path = cfg.output / plot_file_name(cfg.dataset_name, kind);
    write_text(path, render_plot_csv(rows, kind, cfg.dataset_name));
    bundle.plots.push_back(path);
  }
  check_summary_consistency(points_text, read_text(bundle.summary));
  bundle.records = records_from_rows(rows);
  return bundle;
}

}  // namespace

Datasets load_datasets(const ExperimentConfig& cfg) {
  Datasets d;
  if (cfg.source == DatasetSource::kSynthetic) {
    d.train = generate_synthetic(cfg.synthetic_train);
    SyntheticSpec test = cfg.synthetic_train;
    test.per_class = cfg.synthetic_test_per_class;
    test.seed = cfg.synthetic_test_seed;
    d.test = generate_synthetic(test);
  } else {
    d.train = load_idx_dataset(cfg.train_images, cfg.train_labels);
    d.test = load_idx_dataset(cfg.test_images, cfg.test_labels);
    const std::size_t classes = std::max(d.train.class_count, d.test.class_count);
    d.train.class_count = d.test.class_count = classes;
    if (d.train.sample_shape() != d.test.sample_shape()) {
      fail(ErrorCode::kShapeMismatch, "train and test images differ in shape");
    }
  }
  return d;
}

cnn::ArchitectureDescriptor resolve_architecture(const ExperimentConfig& cfg, const cnn::Dataset& train) {
  const auto shape = train.sample_shape();
  cnn::ArchitectureDescriptor arch;
  if (cfg.architecture.empty()) {
    arch = cnn::ArchitectureDescriptor::desk_default(shape[0], shape[1], shape[2], train.class_count);
  } else {
    arch = cnn::architecture_from_json(nlohmann::json::parse(read_text(cfg.architecture)));
    if (arch.input_shape() != shape || arch.classes != train.class_count) {
      fail(ErrorCode::kInvalidArchitecture, "architecture input " + numgrad::shape_string(arch.input_shape()) +
                                                " does not match the data " + numgrad::shape_string(shape));
    }
  }
  arch.validate();
  return arch;
}

cnn::ModelState train_original(const ExperimentConfig& cfg, const cnn::Dataset& train) {
  cnn::TrainOptions opts = cfg.train;
  opts.shuffle_seed = cfg.seed_shuffle;
  return cnn::train(cnn::build_model(resolve_architecture(cfg, train), cfg.seed_init), train, opts);
}

adversary::AugmentedSets attack_stage(const ExperimentConfig& cfg, const cnn::ModelState& model,
                                      const Datasets& data, std::size_t threads) {
  auto sets = adversary::build_augmented_sets(model, data.train, data.test, cfg.adv_fraction, cfg.attack,
                                              cfg.seed_attack, threads);
  if (sets.adv_train.size() == 0) fail(ErrorCode::kEmptyDataset, "attack.fraction selects no Train rows");
  return sets;
}

std::map<Metric, MetricResult> score_stage(const ExperimentConfig& cfg, const cnn::ModelState& model,
                                           const adversary::AugmentedSets& sets, std::size_t threads) {
  guidance::ScoringConfig sc = cfg.scoring;
  sc.random_seed = cfg.seed_random;
  sc.threads = threads;
  std::map<Metric, MetricResult> out;
  for (Metric m : cfg.metrics) {
    auto timed = guidance::timed_scoring(m, model, sets.train_star, sc);
    MetricResult r;
    r.order = guidance::order_inputs(timed.scores);
    r.scores = std::move(timed.scores);
    r.seconds = timed.seconds;
    out.emplace(m, std::move(r));
  }
  return out;
}

retrainer::RetrainOptions retrain_options(const ExperimentConfig& cfg, std::size_t threads) {
  retrainer::RetrainOptions opts;
  opts.train = cfg.retrain;
  opts.train.shuffle_seed = cfg.seed_shuffle;
  opts.fresh_init_seed = cfg.seed_init;
  opts.threads = threads;
  return opts;
}

std::vector<retrainer::ExperimentRecord> retrain_stage(const ExperimentConfig& cfg, const cnn::ModelState& model,
                                                       const adversary::AugmentedSets& sets,
                                                       const std::map<Metric, MetricResult>& metrics,
                                                       std::size_t threads, const retrainer::RetrainOptions* base) {
  const auto opts = base ? *base : retrain_options(cfg, threads);
  std::vector<retrainer::ExperimentRecord> records;
  for (auto kind : cfg.configs) {
    for (Metric m : cfg.metrics) {
      const auto it = metrics.find(m);
      if (it == metrics.end()) {
        fail(ErrorCode::kInvalidArgument, "no scores for metric " + std::string(guidance::to_string(m)));
      }
      records.push_back(retrainer::run_experiment(kind, m, model, sets, it->second.order, opts, it->second.seconds));
    }
  }
  return records;
}

void command_train(const ExperimentConfig& cfg) {
  with_manifest(cfg, "train", [&] {
    const auto data = load_datasets(cfg);
    save_data(cfg, data.train, kTrainFiles);
    save_data(cfg, data.test, kTestFiles);
    cnn::save_model(train_original(cfg, data.train), cfg.output / files::kModel);
  });
}

void command_attack(const ExperimentConfig& cfg, std::size_t threads) {
  with_manifest(cfg, "attack", [&] {
    const auto model = load_original(cfg);
    const std::size_t classes = model.arch.classes;
    const Datasets data{load_data(cfg, kTrainFiles, classes), load_data(cfg, kTestFiles, classes)};
    save_sets(cfg, attack_stage(cfg, model, data, threads));
  });
}

void command_score(const ExperimentConfig& cfg, std::size_t threads) {
  with_manifest(cfg, "score", [&] {
    const auto model = load_original(cfg);
    save_metrics(cfg, score_stage(cfg, model, load_sets(cfg, model), threads));
  });
}

void command_retrain(const ExperimentConfig& cfg, std::size_t threads) {
  with_manifest(cfg, "retrain", [&] {
    const auto model = load_original(cfg);
    save_points(cfg, retrain_stage(cfg, model, load_sets(cfg, model), load_metrics(cfg), threads));
  });
}

ReportBundle command_report(const ExperimentConfig& cfg) {
  ReportBundle bundle;
  with_manifest(cfg, "report", [&] { bundle = report_from_files(cfg); });
  return bundle;
}

ReportBundle run_pipeline(const ExperimentConfig& cfg, std::size_t threads) {
  cfg.validate();
  std::string stage = "train";
  fs::create_directories(cfg.output);
  try {
    const auto data = load_datasets(cfg);
    save_data(cfg, data.train, kTrainFiles);
    save_data(cfg, data.test, kTestFiles);
    const auto model = train_original(cfg, data.train);
    cnn::save_model(model, cfg.output / files::kModel);

    stage = "attack";
    const auto sets = attack_stage(cfg, model, data, threads);
    save_sets(cfg, sets);

    stage = "score";
    const auto metrics = score_stage(cfg, model, sets, threads);
    save_metrics(cfg, metrics);

    stage = "retrain";
    auto records = retrain_stage(cfg, model, sets, metrics, threads);
    save_points(cfg, records);

    stage = "report";
    ReportBundle bundle = report_from_files(cfg);
    bundle.records = std::move(records);
    write_manifest(cfg, "ok", "run");
    return bundle;
  } catch (const std::exception& e) {
    try {
      write_manifest(cfg, "failed", stage, e.what());
    } catch (...) {
    }
    throw;
  }
}

TrendReport run_trend(const ExperimentConfig& cfg, std::size_t seeds, std::size_t threads) {
  if (seeds == 0) fail(ErrorCode::kInvalidArgument, "trend needs at least one seed");
  cfg.validate();
  fs::create_directories(cfg.output);
  const auto data = load_datasets(cfg);
  std::vector<std::vector<retrainer::ExperimentRecord>> per_seed;
  for (std::size_t k = 0; k < seeds; ++k) {
    ExperimentConfig c = cfg;
    c.configs = {retrainer::RetrainConfigKind::kC2};
    c.seed_init += k;
    c.seed_shuffle += k;
    c.seed_attack += k;
    c.seed_random += k;
    const auto model = train_original(c, data.train);
    const auto sets = attack_stage(c, model, data, threads);
    per_seed.push_back(retrain_stage(c, model, sets, score_stage(c, model, sets, threads), threads));
  }
  auto report = trend_report(per_seed);
  write_text(cfg.output / files::kTrend, render_trend_csv(report));
  return report;
}

std::string sha256_file(const fs::path& path) {
  const std::string bytes = read_text(path);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    fail(ErrorCode::kIo, "SHA-256 failed for '" + path.string() + "'");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xF];
  }
  return out;
}

void write_manifest(const ExperimentConfig& cfg, const std::string& status, const std::string& stage,
                    const std::string& error) {
  nlohmann::ordered_json j;
  j["status"] = status;
  j["stage"] = stage;
  if (!error.empty()) j["error"] = error;
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm utc{};
  gmtime_r(&now, &utc);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &utc);
  j["created_utc"] = stamp;
  nlohmann::ordered_json config;
  for (const auto& [k, v] : cfg.echo()) config[k] = v;
  j["config"] = config;

  std::vector<fs::path> paths;
  if (fs::exists(cfg.output)) {
    for (const auto& entry : fs::recursive_directory_iterator(cfg.output)) {
      if (entry.is_regular_file() && entry.path().filename() != files::kManifest) paths.push_back(entry.path());
    }
  }
  std::sort(paths.begin(), paths.end());
  nlohmann::ordered_json artifacts = nlohmann::ordered_json::object();
  for (const auto& p : paths) artifacts[fs::relative(p, cfg.output).generic_string()] = sha256_file(p);
  j["artifacts"] = artifacts;
  write_text(cfg.output / files::kManifest, j.dump(2) + "\n");
}

std::size_t threads_from_env() {
  const char* v = std::getenv("GR_THREADS");
  if (!v || !*v) return 1;
  try {
    return std::max<std::size_t>(1, static_cast<std::size_t>(parse_u64(v)));
  } catch (const Error&) {
    fail(ErrorCode::kConfig, std::string("GR_THREADS must be a positive integer, got '") + v + "'");
  }
}

}  // namespace gr::bench
