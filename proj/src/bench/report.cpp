#include "gr/bench/report.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "gr/bench/text.hpp"
#include "gr/error.hpp"
#include "gr/guidance/scoring.hpp"

namespace gr::bench {

using retrainer::ExperimentRecord;
using retrainer::RetrainConfigKind;

std::string utilization_string(std::size_t used, std::size_t total) {
  return std::to_string(used) + "/" + std::to_string(total);
}

std::vector<PointRow> point_rows(const std::string& dataset, const std::vector<ExperimentRecord>& records) {
  std::vector<PointRow> rows;
  for (const auto& rec : records) {
    for (const auto& run : rec.runs) {
      rows.push_back({dataset, rec.kind, rec.metric, run.point, run.size, rec.total, run.accuracy_test_star,
                      run.accuracy_test, run.accuracy_adv_test, rec.original_accuracy});
    }
  }
  return rows;
}

std::vector<ExperimentRecord> records_from_rows(const std::vector<PointRow>& rows) {
  std::vector<ExperimentRecord> records;
  for (const auto& row : rows) {
    auto it = std::find_if(records.begin(), records.end(),
                           [&](const auto& r) { return r.kind == row.config && r.metric == row.metric; });
    if (it == records.end()) {
      ExperimentRecord rec;
      rec.kind = row.config;
      rec.metric = row.metric;
      rec.total = row.total_inputs;
      rec.original_accuracy = row.original_accuracy;
      records.push_back(std::move(rec));
      it = records.end() - 1;
    }
    retrainer::RetrainRun run;
    run.kind = row.config;
    run.metric = row.metric;
    run.point = row.point;
    run.size = row.input_size;
    run.accuracy_test_star = row.accuracy_test_star;
    run.accuracy_test = row.accuracy_test;
    run.accuracy_adv_test = row.accuracy_adv_test;
    it->runs.push_back(std::move(run));
  }
  for (auto& rec : records) {
    std::sort(rec.runs.begin(), rec.runs.end(), [](const auto& a, const auto& b) { return a.size < b.size; });
    retrainer::summarize(rec);
  }
  return records;
}

namespace {

std::vector<std::vector<std::string>> parse_rows(const std::string& text, const char* header) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != header) {
    fail(ErrorCode::kInvalidArgument, std::string("CSV header must be '") + header + "'");
  }
  const std::size_t columns = split(header, ',').size();
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split(line, ',');
    if (cells.size() != columns) {
      fail(ErrorCode::kInvalidArgument, "CSV row has " + std::to_string(cells.size()) + " cells, expected " +
                                            std::to_string(columns));
    }
    rows.push_back(std::move(cells));
  }
  return rows;
}

}  // namespace

std::string render_points_csv(const std::vector<PointRow>& rows) {
  std::string out = std::string(kPointsHeader) + "\n";
  for (const auto& r : rows) {
    out += r.dataset + "," + std::string(retrainer::to_string(r.config)) + "," +
           std::string(guidance::to_string(r.metric)) + "," + std::to_string(r.point) + "," +
           std::to_string(r.input_size) + "," + std::to_string(r.total_inputs) + "," +
           format_real(r.accuracy_test_star) + "," + format_real(r.accuracy_test) + "," +
           format_real(r.accuracy_adv_test) + "," + format_real(r.original_accuracy) + "\n";
  }
  return out;
}

std::vector<PointRow> parse_points_csv(const std::string& text) {
  std::vector<PointRow> rows;
  for (const auto& c : parse_rows(text, kPointsHeader)) {
    PointRow r;
    r.dataset = c[0];
    r.config = retrainer::parse_config_kind(c[1]);
    r.metric = guidance::parse_metric(c[2]);
    r.point = parse_u64(c[3]);
    r.input_size = parse_u64(c[4]);
    r.total_inputs = parse_u64(c[5]);
    r.accuracy_test_star = parse_real(c[6]);
    r.accuracy_test = parse_real(c[7]);
    r.accuracy_adv_test = parse_real(c[8]);
    r.original_accuracy = parse_real(c[9]);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string render_summary_csv(const std::vector<PointRow>& rows) {
  std::string out = std::string(kSummaryHeader) + "\n";
  if (rows.empty()) return out;
  const std::string& dataset = rows.front().dataset;
  for (const auto& rec : records_from_rows(rows)) {
    out += dataset + "," + std::string(retrainer::to_string(rec.kind)) + "," +
           std::string(guidance::to_string(rec.metric)) + "," + format_fixed(rec.original_accuracy, 3) + "," +
           format_fixed(rec.best_accuracy, 3) + "," + std::to_string(rec.best_size) + "," +
           std::to_string(rec.total) + "," + utilization_string(rec.best_size, rec.total) + "," +
           format_fixed(rec.resource_utilization(), 4) + "," + format_real(rec.original_accuracy) + "," +
           format_real(rec.best_accuracy) + "\n";
  }
  return out;
}

std::string render_comparison_csv(const std::vector<PointRow>& rows) {
  std::string out = std::string(kComparisonHeader) + "\n";
  if (rows.empty()) return out;
  const std::string& dataset = rows.front().dataset;
  for (const auto& c : retrainer::compare_records(records_from_rows(rows))) {
    out += dataset + "," + std::string(guidance::to_string(c.metric)) + "," + format_real(c.original_accuracy) +
           "," + std::to_string(c.budget) + "," + format_real(c.c2_accuracy) + "," +
           utilization_string(c.c2_size, c.c2_total) + "," +
           format_fixed(static_cast<double>(c.c2_size) / static_cast<double>(c.c2_total), 4) + "," +
           (c.c2_inexact ? "1" : "0") + "," + format_real(c.c3_accuracy) + "," +
           utilization_string(c.c3_size, c.c3_total) + "," +
           format_fixed(static_cast<double>(c.c3_size) / static_cast<double>(c.c3_total), 4) + "\n";
  }
  return out;
}

std::string render_timing_csv(const std::vector<TimingRow>& rows) {
  std::string out = std::string(kTimingHeader) + "\n";
  for (const auto& r : rows) {
    out += r.dataset + "," + std::string(guidance::to_string(r.metric)) + "," + format_real(r.seconds) + "," +
           guidance::format_hms(r.seconds) + "\n";
  }
  return out;
}

std::vector<TimingRow> parse_timing_csv(const std::string& text) {
  std::vector<TimingRow> rows;
  for (const auto& c : parse_rows(text, kTimingHeader)) {
    TimingRow r{c[0], guidance::parse_metric(c[1]), parse_real(c[2])};
    if (guidance::format_hms(r.seconds) != c[3]) {
      fail(ErrorCode::kInvalidArgument, "timing row for " + c[1] + " has duration '" + c[3] +
                                            "' inconsistent with " + c[2] + " s");
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string plot_file_name(const std::string& dataset, RetrainConfigKind config) {
  return "plot-" + dataset + "-" + std::string(retrainer::to_string(config)) + ".csv";
}

std::string render_plot_csv(const std::vector<PointRow>& rows, RetrainConfigKind config,
                            const std::string& dataset) {
  std::vector<const PointRow*> selected;
  for (const auto& r : rows) {
    if (r.config == config && r.dataset == dataset) selected.push_back(&r);
  }
  std::sort(selected.begin(), selected.end(), [](const PointRow* a, const PointRow* b) {
    const auto an = guidance::to_string(a->metric), bn = guidance::to_string(b->metric);
    if (an != bn) return an < bn;
    return a->input_size < b->input_size;
  });
  std::string out = std::string(kPlotHeader) + "\n";
  for (const PointRow* r : selected) {
    out += std::string(guidance::to_string(r->metric)) + "," + std::to_string(r->input_size) + "," +
           format_real(r->accuracy_test_star) + "\n";
  }
  return out;
}

void check_summary_consistency(const std::string& points_text, const std::string& summary_text) {
  const auto expected = render_summary_csv(parse_points_csv(points_text));
  if (expected == summary_text) return;
  std::istringstream a(expected), b(summary_text);
  std::string la, lb;
  for (std::size_t line = 1;; ++line) {
    const bool ga = static_cast<bool>(std::getline(a, la));
    const bool gb = static_cast<bool>(std::getline(b, lb));
    if (!ga && !gb) break;
    if (la != lb || ga != gb) {
      fail(ErrorCode::kInvalidArgument, "summary line " + std::to_string(line) + " is '" + (gb ? lb : "") +
                                            "' but the per-point data gives '" + (ga ? la : "") + "'");
    }
  }
  fail(ErrorCode::kInvalidArgument, "summary differs from the per-point data");
}

TrendReport trend_report(const std::vector<std::vector<ExperimentRecord>>& per_seed, double fraction) {
  if (per_seed.empty()) fail(ErrorCode::kInvalidArgument, "trend needs at least one seed");
  TrendReport report;
  report.fraction = fraction;
  std::map<guidance::Metric, std::vector<std::size_t>> sizes;
  for (const auto& records : per_seed) {
    for (const auto& rec : records) {
      if (rec.kind == RetrainConfigKind::kC2) sizes[rec.metric].push_back(retrainer::size_to_reach(rec, fraction));
    }
  }
  for (auto& [metric, list] : sizes) {
    if (list.size() != per_seed.size()) {
      fail(ErrorCode::kInvalidArgument, "metric " + std::string(guidance::to_string(metric)) +
                                            " lacks a C2 record for some seed");
    }
    TrendRow row{metric, list, 0.0};
    for (std::size_t s : list) row.mean_size += static_cast<double>(s);
    row.mean_size /= static_cast<double>(list.size());
    report.rows.push_back(std::move(row));
  }
  bool have_sa = false, have_random = false;
  for (const auto& row : report.rows) {
    if (row.metric == guidance::Metric::kRandom) {
      have_random = true;
      report.random_mean = row.mean_size;
    } else if (row.metric == guidance::Metric::kLSA || row.metric == guidance::Metric::kDSA) {
      if (!have_sa || row.mean_size < report.best_sa_mean) {
        report.best_sa = row.metric;
        report.best_sa_mean = row.mean_size;
      }
      have_sa = true;
    }
  }
  if (!have_sa || !have_random) fail(ErrorCode::kInvalidArgument, "trend needs C2 records for Random and LSA or DSA");
  report.holds = report.best_sa_mean <= report.random_mean;
  return report;
}

std::string render_trend_csv(const TrendReport& report) {
  std::string out = "metric,seeds,mean_input_size,sizes\n";
  for (const auto& row : report.rows) {
    std::string sizes;
    for (std::size_t i = 0; i < row.sizes.size(); ++i) sizes += (i ? " " : "") + std::to_string(row.sizes[i]);
    out += std::string(guidance::to_string(row.metric)) + "," + std::to_string(row.sizes.size()) + "," +
           format_real(row.mean_size) + "," + sizes + "\n";
  }
  out += "best_sa," + std::string(guidance::to_string(report.best_sa)) + "," + format_real(report.best_sa_mean) +
         ",\n";
  out += "random,RANDOM," + format_real(report.random_mean) + ",\n";
  out += std::string("holds,") + (report.holds ? "yes" : "no") + ",,\n";
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) fail(ErrorCode::kIo, "write to '" + path.string() + "' failed");
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace gr::bench
