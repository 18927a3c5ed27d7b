#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gr/cnn/dataset.hpp"
#include "gr/cnn/model.hpp"

namespace gr::guidance {

/// Row-major matrix of traces with one true label and input id per row.
struct TraceMatrix {
  std::size_t dim = 0;
  std::vector<double> values;
  std::vector<std::size_t> labels;
  std::vector<std::size_t> ids;
  std::vector<std::size_t> predicted;  // model's class for each row

  std::size_t rows() const noexcept { return labels.size(); }
  std::span<const double> row(std::size_t r) const { return {values.data() + r * dim, dim}; }
};

/// Probes every row of `data` (ids 0..N-1) through `layout`.
TraceMatrix collect_traces(const cnn::ModelState& model, const cnn::Dataset& data,
                           const cnn::TraceLayout& layout, std::size_t threads = 1);

// ---------------------------------------------------------------------------
// Likelihood-based surprise.

/// Gaussian KDE of one class's traces over the retained neurons, with a
/// diagonal bandwidth per neuron.
struct ClassDensity {
  std::size_t label = 0;
  std::vector<double> samples;  // n x d, retained neurons only
  std::vector<std::size_t> ids;
  std::vector<double> bandwidth;  // d entries, all > 0

  std::size_t count() const noexcept { return ids.size(); }
};

struct LsaEstimator {
  std::string layer;
  std::vector<std::size_t> retained;  // neuron indices kept by the variance filter
  std::vector<ClassDensity> classes;  // sorted by label; classes without rows are absent

  const ClassDensity* find(std::size_t label) const;
};

inline constexpr double kDefaultVarianceThreshold = 1e-5;

/// Scott's rule: sigma * n^(-1/(d+4)).
double scott_bandwidth(double sigma, std::size_t n, std::size_t d);

/// Drops neurons whose variance over all rows is below the threshold, then
/// fits one density per true class. A class with a single row is an error.
LsaEstimator fit_lsa_from_traces(const TraceMatrix& traces, double variance_threshold);

LsaEstimator fit_lsa(const cnn::ModelState& model, const cnn::Dataset& train_star,
                     const std::string& layer, double variance_threshold = kDefaultVarianceThreshold,
                     std::size_t threads = 1);

/// -log(mean kernel density + 1e-300) of a full-layer trace under class
/// `predicted`. `exclude_id` drops that reference row (leave-one-out).
double lsa_from_trace(const LsaEstimator& estimator, std::span<const double> trace,
                      std::size_t predicted, std::optional<std::size_t> exclude_id = std::nullopt);

/// LSA of an unseen input against the class the model predicts for it.
double lsa_score(const LsaEstimator& estimator, const cnn::ModelState& model,
                 const numgrad::Tensor& input);

// ---------------------------------------------------------------------------
// Distance-based surprise.

/// Reference traces grouped by true class.
struct DsaIndex {
  std::vector<std::string> layers;
  TraceMatrix traces;
  std::vector<std::vector<std::size_t>> rows_by_class;  // rows of `traces` per label
};

inline constexpr double kDsaDegenerateSentinel = 1e12;

struct DsaResult {
  double value = 0.0;
  bool degenerate = false;  // ||a(x_a) - a(x_b)|| was 0; value is the sentinel
  std::size_t nearest_same = 0;   // row of x_a
  std::size_t nearest_other = 0;  // row of x_b
};

DsaIndex build_dsa_index(TraceMatrix traces, std::vector<std::string> layers);

DsaIndex fit_dsa(const cnn::ModelState& model, const cnn::Dataset& train_star,
                 const std::vector<std::string>& layers, std::size_t threads = 1);

/// x_a: nearest reference row of class `predicted`; x_b: reference row of any
/// other class nearest to x_a; value ||x - x_a|| / ||x_a - x_b||.
DsaResult dsa_from_trace(const DsaIndex& index, std::span<const double> trace,
                         std::size_t predicted, std::optional<std::size_t> exclude_id = std::nullopt);

double dsa_score(const DsaIndex& index, const cnn::ModelState& model, const numgrad::Tensor& input);

/// Scores every reference row against the rest of the index (leave-one-out),
/// conditioning on each row's predicted class.
std::vector<DsaResult> dsa_score_members(const DsaIndex& index, std::size_t threads = 1);

}  // namespace gr::guidance
