#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "gr/adversary/fgsm.hpp"
#include "gr/bench/config.hpp"
#include "gr/bench/report.hpp"
#include "gr/cnn/model.hpp"
#include "gr/guidance/scoring.hpp"
#include "gr/retrainer/retrainer.hpp"

namespace gr::bench {

struct Datasets {
  cnn::Dataset train;
  cnn::Dataset test;
};

struct MetricResult {
  guidance::GuidanceScores scores;
  std::vector<std::size_t> order;  // Train* ids, most guided first
  double seconds = 0.0;
};

// Pure stages; nothing here touches the output directory.
Datasets load_datasets(const ExperimentConfig& cfg);
cnn::ArchitectureDescriptor resolve_architecture(const ExperimentConfig& cfg, const cnn::Dataset& train);
cnn::ModelState train_original(const ExperimentConfig& cfg, const cnn::Dataset& train);
adversary::AugmentedSets attack_stage(const ExperimentConfig& cfg, const cnn::ModelState& model,
                                      const Datasets& data, std::size_t threads = 1);
std::map<guidance::Metric, MetricResult> score_stage(const ExperimentConfig& cfg, const cnn::ModelState& model,
                                                     const adversary::AugmentedSets& sets, std::size_t threads = 1);
std::vector<retrainer::ExperimentRecord> retrain_stage(
    const ExperimentConfig& cfg, const cnn::ModelState& model, const adversary::AugmentedSets& sets,
    const std::map<guidance::Metric, MetricResult>& metrics, std::size_t threads = 1,
    const retrainer::RetrainOptions* base = nullptr);

/// Options the retrain stage derives from the config (epochs, shuffle seed,
/// C1 init seed).
retrainer::RetrainOptions retrain_options(const ExperimentConfig& cfg, std::size_t threads = 1);

/// File names inside the output directory.
namespace files {
inline constexpr const char* kModel = "model.grcnn";
inline constexpr const char* kProvenance = "provenance.csv";
inline constexpr const char* kTiming = "timing.csv";
inline constexpr const char* kPoints = "points.csv";
inline constexpr const char* kSummary = "summary.csv";
inline constexpr const char* kComparison = "comparison.csv";
inline constexpr const char* kManifest = "manifest.json";
inline constexpr const char* kTrend = "trend.csv";
std::string scores(guidance::Metric metric);
std::string ordering(guidance::Metric metric);
}  // namespace files

struct ReportBundle {
  std::filesystem::path root;
  std::filesystem::path points, summary, comparison, timing, manifest;
  std::vector<std::filesystem::path> plots;
  std::vector<retrainer::ExperimentRecord> records;  // models present only when retrained in-process
};

// Staged commands: each reads its inputs from, and writes its outputs to,
// cfg.output, then refreshes the manifest.
void command_train(const ExperimentConfig& cfg);
void command_attack(const ExperimentConfig& cfg, std::size_t threads = 1);
void command_score(const ExperimentConfig& cfg, std::size_t threads = 1);
void command_retrain(const ExperimentConfig& cfg, std::size_t threads = 1);
ReportBundle command_report(const ExperimentConfig& cfg);

/// All stages in order. On failure the manifest is rewritten with status
/// "failed", the failing stage and the message, and the error is rethrown;
/// files already written stay in place.
ReportBundle run_pipeline(const ExperimentConfig& cfg, std::size_t threads = 1);

/// Runs the C2 sweeps for `seeds` seed sets (every named seed offset by the
/// seed index) and writes the trend comparison to cfg.output.
TrendReport run_trend(const ExperimentConfig& cfg, std::size_t seeds, std::size_t threads = 1);

/// Writes manifest.json: status, stage, error, config echo, UTC timestamp and
/// the SHA-256 of every other file under cfg.output.
void write_manifest(const ExperimentConfig& cfg, const std::string& status, const std::string& stage,
                    const std::string& error = {});

/// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

/// Parallel fan-out from GR_THREADS (default 1, minimum 1).
std::size_t threads_from_env();

}  // namespace gr::bench
