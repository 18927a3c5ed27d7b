#include "gr/retrainer/retrainer.hpp"

#include <algorithm>
#include <chrono>
#include <map>

#include "gr/error.hpp"
#include "gr/parallel.hpp"

namespace gr::retrainer {

std::string_view to_string(RetrainConfigKind kind) {
  switch (kind) {
    case RetrainConfigKind::kC1: return "C1";
    case RetrainConfigKind::kC2: return "C2";
    case RetrainConfigKind::kC3: return "C3";
  }
  return "?";
}

RetrainConfigKind parse_config_kind(std::string_view text) {
  if (text == "C1" || text == "c1") return RetrainConfigKind::kC1;
  if (text == "C2" || text == "c2") return RetrainConfigKind::kC2;
  if (text == "C3" || text == "c3") return RetrainConfigKind::kC3;
  fail(ErrorCode::kInvalidArgument, "unknown retraining configuration '" + std::string(text) + "'");
}

std::vector<std::size_t> sweep_sizes(std::size_t total) {
  if (total < kSweepPoints) {
    fail(ErrorCode::kInvalidArgument, "sweep needs at least " + std::to_string(kSweepPoints) +
                                          " inputs, got " + std::to_string(total));
  }
  std::vector<std::size_t> sizes(kSweepPoints);
  for (std::size_t i = 1; i <= kSweepPoints; ++i) {
    // round(i * total / 20), halves rounded up, in exact integer arithmetic
    sizes[i - 1] = (2 * i * total + kSweepPoints) / (2 * kSweepPoints);
  }
  sizes.back() = total;
  for (std::size_t i = 1; i < sizes.size(); ++i) {
    if (sizes[i] <= sizes[i - 1]) sizes[i] = sizes[i - 1] + 1;
  }
  return sizes;
}

std::vector<std::size_t> retraining_pool(RetrainConfigKind kind, const adversary::AugmentedSets& sets,
                                         const std::vector<std::size_t>& ordered_train_star) {
  if (ordered_train_star.size() != sets.train_star.size()) {
    fail(ErrorCode::kInvalidArgument, "ordering covers " + std::to_string(ordered_train_star.size()) +
                                          " of " + std::to_string(sets.train_star.size()) + " Train* inputs");
  }
  if (kind != RetrainConfigKind::kC3) return ordered_train_star;
  std::vector<std::size_t> pool;
  pool.reserve(sets.adv_train.size());
  for (std::size_t id : ordered_train_star) {
    if (sets.train_star_is_adversarial(id)) pool.push_back(id);
  }
  return pool;
}

cnn::ModelState initial_state(RetrainConfigKind kind, const cnn::ModelState& original,
                              std::uint64_t fresh_init_seed) {
  if (kind == RetrainConfigKind::kC1) return cnn::build_model(original.arch, fresh_init_seed);
  return original;
}

RetrainRun retrain_point(RetrainConfigKind kind, guidance::Metric metric,
                         const cnn::ModelState& original, const adversary::AugmentedSets& sets,
                         const std::vector<std::size_t>& ordered_train_star, std::size_t size,
                         const RetrainOptions& options, std::size_t point) {
  const auto pool = retraining_pool(kind, sets, ordered_train_star);
  if (size == 0 || size > pool.size()) {
    fail(ErrorCode::kInvalidArgument, "input size " + std::to_string(size) + " exceeds the " +
                                          std::string(to_string(kind)) + " pool of " +
                                          std::to_string(pool.size()));
  }
  const auto start = std::chrono::steady_clock::now();
  RetrainRun run;
  run.kind = kind;
  run.metric = metric;
  run.point = point;
  run.size = size;
  run.training_ids.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(size));

  const cnn::ModelState init = initial_state(kind, original, options.fresh_init_seed);
  if (options.on_initial_state) options.on_initial_state(kind, size, init);
  run.model = cnn::train(init, sets.train_star, run.training_ids, options.train);

  run.accuracy_test_star = cnn::accuracy(run.model, sets.test_star);
  run.accuracy_adv_test = cnn::accuracy(run.model, sets.adv_test);
  // Test is the clean prefix of Test*.
  std::vector<std::size_t> clean(sets.test_size);
  for (std::size_t i = 0; i < clean.size(); ++i) clean[i] = i;
  run.accuracy_test = cnn::accuracy(run.model, sets.test_star.subset(clean));
  run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return run;
}

double ExperimentRecord::resource_utilization() const {
  if (total == 0) fail(ErrorCode::kInvalidArgument, "record has no inputs");
  return static_cast<double>(best_size) / static_cast<double>(total);
}

void summarize(ExperimentRecord& record) {
  if (record.runs.empty()) fail(ErrorCode::kInvalidArgument, "record has no runs");
  record.best_accuracy = record.runs.front().accuracy_test_star;
  record.best_size = record.runs.front().size;
  for (const auto& run : record.runs) {
    if (run.accuracy_test_star > record.best_accuracy ||
        (run.accuracy_test_star == record.best_accuracy && run.size < record.best_size)) {
      record.best_accuracy = run.accuracy_test_star;
      record.best_size = run.size;
    }
  }
}

ExperimentRecord run_experiment(RetrainConfigKind kind, guidance::Metric metric,
                                const cnn::ModelState& original, const adversary::AugmentedSets& sets,
                                const std::vector<std::size_t>& ordered_train_star,
                                const RetrainOptions& options, double metric_seconds) {
  const auto pool = retraining_pool(kind, sets, ordered_train_star);
  const auto sizes = sweep_sizes(pool.size());
  ExperimentRecord record;
  record.kind = kind;
  record.metric = metric;
  record.total = pool.size();
  record.metric_seconds = metric_seconds;
  record.original_accuracy = cnn::accuracy(original, sets.test_star);
  record.runs.resize(sizes.size());
  parallel_for(sizes.size(), options.threads, [&](std::size_t i) {
    record.runs[i] = retrain_point(kind, metric, original, sets, ordered_train_star, sizes[i], options, i);
  });
  summarize(record);
  return record;
}

namespace {

const RetrainRun* run_at_or_below(const ExperimentRecord& record, std::size_t size) {
  const RetrainRun* best = nullptr;
  for (const auto& run : record.runs) {
    if (run.size <= size && (!best || run.size > best->size)) best = &run;
  }
  return best;
}

}  // namespace

std::vector<BudgetComparison> compare_records(const std::vector<ExperimentRecord>& records) {
  std::map<guidance::Metric, const ExperimentRecord*> c2, c3;
  for (const auto& r : records) {
    if (r.kind == RetrainConfigKind::kC2) c2[r.metric] = &r;
    if (r.kind == RetrainConfigKind::kC3) c3[r.metric] = &r;
  }
  std::vector<BudgetComparison> rows;
  for (const auto& [metric, c3_record] : c3) {
    const auto it = c2.find(metric);
    if (it == c2.end()) continue;
    const ExperimentRecord& two = *it->second;
    BudgetComparison row;
    row.metric = metric;
    row.original_accuracy = c3_record->original_accuracy;
    row.budget = c3_record->total;
    const RetrainRun* at = run_at_or_below(two, row.budget);
    if (!at) {
      at = &two.runs.front();  // every C2 point exceeds the budget; take the smallest
    }
    row.c2_inexact = at->size != row.budget;
    row.c2_accuracy = at->accuracy_test_star;
    row.c2_size = at->size;
    row.c2_total = two.total;
    row.c3_accuracy = c3_record->best_accuracy;
    row.c3_size = c3_record->best_size;
    row.c3_total = c3_record->total;
    rows.push_back(row);
  }
  return rows;
}

std::size_t size_to_reach(const ExperimentRecord& record, double fraction) {
  if (record.runs.empty()) fail(ErrorCode::kInvalidArgument, "record has no runs");
  const double target = fraction * record.runs.back().accuracy_test_star;
  for (const auto& run : record.runs) {
    if (run.accuracy_test_star >= target) return run.size;
  }
  return record.runs.back().size;
}

}  // namespace gr::retrainer
