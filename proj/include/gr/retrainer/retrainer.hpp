#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include "gr/adversary/fgsm.hpp"
#include "gr/cnn/model.hpp"
#include "gr/guidance/scores.hpp"

namespace gr::retrainer {

/// C1: fresh weights, pool Train*. C2: M's weights, pool Train*.
/// C3: M's weights, pool Adv-Train only.
enum class RetrainConfigKind { kC1, kC2, kC3 };

std::string_view to_string(RetrainConfigKind kind);
RetrainConfigKind parse_config_kind(std::string_view text);

inline constexpr std::size_t kSweepPoints = 20;

/// s_i = round(i * total / 20) for i < 20, s_20 = total, bumped upward where
/// needed to stay strictly increasing.
std::vector<std::size_t> sweep_sizes(std::size_t total);

struct RetrainOptions {
  cnn::TrainOptions train{5, 32, 0.01, 0.9, 0};
  std::uint64_t fresh_init_seed = 0;  // C1 initialization, shared by every point
  std::size_t threads = 1;            // points trained concurrently
  /// Observer invoked with each point's starting model, before any update.
  std::function<void(RetrainConfigKind, std::size_t size, const cnn::ModelState&)> on_initial_state;
};

/// The kind's candidate inputs (Train* ids) in guidance order: all of
/// `ordered_train_star` for C1/C2, only its adversarial ids for C3.
std::vector<std::size_t> retraining_pool(RetrainConfigKind kind, const adversary::AugmentedSets& sets,
                                         const std::vector<std::size_t>& ordered_train_star);

/// Starting weights for a point: a fresh init for C1, a copy of M otherwise.
cnn::ModelState initial_state(RetrainConfigKind kind, const cnn::ModelState& original,
                              std::uint64_t fresh_init_seed);

struct RetrainRun {
  RetrainConfigKind kind = RetrainConfigKind::kC2;
  guidance::Metric metric = guidance::Metric::kRandom;
  std::size_t point = 0;  // 0-based index into the sweep
  std::size_t size = 0;
  std::vector<std::size_t> training_ids;  // Train* ids used
  cnn::ModelState model;
  double accuracy_test_star = 0.0;
  double accuracy_test = 0.0;
  double accuracy_adv_test = 0.0;
  double seconds = 0.0;
};

/// One independent data point: initial_state(kind) trained on the first
/// `size` pool inputs, then evaluated on Test*, Test and Adv-Test.
RetrainRun retrain_point(RetrainConfigKind kind, guidance::Metric metric,
                         const cnn::ModelState& original, const adversary::AugmentedSets& sets,
                         const std::vector<std::size_t>& ordered_train_star, std::size_t size,
                         const RetrainOptions& options, std::size_t point = 0);

struct ExperimentRecord {
  RetrainConfigKind kind = RetrainConfigKind::kC2;
  guidance::Metric metric = guidance::Metric::kRandom;
  std::vector<RetrainRun> runs;  // one per sweep size, ascending
  double original_accuracy = 0.0;  // M on Test*
  double best_accuracy = 0.0;
  std::size_t best_size = 0;   // u: smallest size attaining best_accuracy
  std::size_t total = 0;       // Tn: pool size
  double metric_seconds = 0.0;

  double resource_utilization() const;
};

/// Best Test* accuracy and the smallest sweep size that reaches it.
void summarize(ExperimentRecord& record);

ExperimentRecord run_experiment(RetrainConfigKind kind, guidance::Metric metric,
                                const cnn::ModelState& original, const adversary::AugmentedSets& sets,
                                const std::vector<std::size_t>& ordered_train_star,
                                const RetrainOptions& options, double metric_seconds = 0.0);

/// C2 at C3's input budget next to C3's best, per metric.
struct BudgetComparison {
  guidance::Metric metric = guidance::Metric::kRandom;
  double original_accuracy = 0.0;
  std::size_t budget = 0;  // C3 pool size
  double c2_accuracy = 0.0;
  std::size_t c2_size = 0;
  std::size_t c2_total = 0;
  bool c2_inexact = false;  // no C2 point at exactly `budget`; nearest smaller used
  double c3_accuracy = 0.0;
  std::size_t c3_size = 0;
  std::size_t c3_total = 0;
};

std::vector<BudgetComparison> compare_records(const std::vector<ExperimentRecord>& records);

/// Smallest sweep size whose Test* accuracy reaches `fraction` of the
/// accuracy at the final (full-pool) point.
std::size_t size_to_reach(const ExperimentRecord& record, double fraction);

}  // namespace gr::retrainer
