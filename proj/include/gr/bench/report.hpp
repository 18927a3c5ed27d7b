#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "gr/guidance/scores.hpp"
#include "gr/retrainer/retrainer.hpp"

namespace gr::bench {

/// One retraining data point as written to the per-point CSV.
struct PointRow {
  std::string dataset;
  retrainer::RetrainConfigKind config = retrainer::RetrainConfigKind::kC2;
  guidance::Metric metric = guidance::Metric::kRandom;
  std::size_t point = 0;
  std::size_t input_size = 0;
  std::size_t total_inputs = 0;
  double accuracy_test_star = 0.0;
  double accuracy_test = 0.0;
  double accuracy_adv_test = 0.0;
  double original_accuracy = 0.0;

  bool operator==(const PointRow&) const = default;
};

struct TimingRow {
  std::string dataset;
  guidance::Metric metric = guidance::Metric::kRandom;
  double seconds = 0.0;
};

inline constexpr const char* kPointsHeader =
    "dataset,config,metric,point,input_size,total_inputs,accuracy_test_star,accuracy_test,"
    "accuracy_adv_test,original_accuracy";
inline constexpr const char* kSummaryHeader =
    "dataset,config,metric,original_accuracy,best_accuracy,input_size,total_inputs,"
    "resource_utilization,resource_utilization_ratio,original_accuracy_exact,best_accuracy_exact";
inline constexpr const char* kComparisonHeader =
    "dataset,metric,original_accuracy,input_budget,c2_accuracy,c2_inputs,c2_ratio,c2_inexact,"
    "c3_accuracy,c3_inputs,c3_ratio";
inline constexpr const char* kTimingHeader = "dataset,metric,seconds,duration";
inline constexpr const char* kPlotHeader = "metric,input_size,accuracy_test_star";

/// "u/T", as in "14400/36366".
std::string utilization_string(std::size_t used, std::size_t total);

std::vector<PointRow> point_rows(const std::string& dataset,
                                 const std::vector<retrainer::ExperimentRecord>& records);
/// Rebuilds records (without models) from rows, one per (config, metric) in
/// first-seen order, summarized.
std::vector<retrainer::ExperimentRecord> records_from_rows(const std::vector<PointRow>& rows);

std::string render_points_csv(const std::vector<PointRow>& rows);
std::vector<PointRow> parse_points_csv(const std::string& text);

/// Summary (one row per (config, metric)) computed from per-point rows alone.
std::string render_summary_csv(const std::vector<PointRow>& rows);
std::string render_comparison_csv(const std::vector<PointRow>& rows);
std::string render_timing_csv(const std::vector<TimingRow>& rows);
std::vector<TimingRow> parse_timing_csv(const std::string& text);

/// Plot data for one (config, dataset): rows sorted by (metric name, input size).
std::string render_plot_csv(const std::vector<PointRow>& rows, retrainer::RetrainConfigKind config,
                            const std::string& dataset);
std::string plot_file_name(const std::string& dataset, retrainer::RetrainConfigKind config);

/// Throws kInvalidArgument if `summary_text` is not exactly what
/// the per-point rows imply.
void check_summary_consistency(const std::string& points_text, const std::string& summary_text);

/// Mean, over seeds, of the smallest C2 sweep size reaching 95% of the final
/// accuracy, per metric; SA metrics (LSA, DSA) are compared with Random.
struct TrendRow {
  guidance::Metric metric = guidance::Metric::kRandom;
  std::vector<std::size_t> sizes;  // one per seed
  double mean_size = 0.0;
};

struct TrendReport {
  double fraction = 0.95;
  std::vector<TrendRow> rows;
  guidance::Metric best_sa = guidance::Metric::kDSA;
  double best_sa_mean = 0.0;
  double random_mean = 0.0;
  bool holds = false;  // best_sa_mean <= random_mean
};

/// `per_seed` holds one record list per seed; only C2 records are used.
TrendReport trend_report(const std::vector<std::vector<retrainer::ExperimentRecord>>& per_seed,
                         double fraction = 0.95);
std::string render_trend_csv(const TrendReport& report);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace gr::bench
