#include "gr/guidance/surprise.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>

#include "gr/error.hpp"
#include "gr/parallel.hpp"

namespace gr::guidance {

TraceMatrix collect_traces(const cnn::ModelState& model, const cnn::Dataset& data,
                           const cnn::TraceLayout& layout, std::size_t threads) {
  if (data.size() == 0) fail(ErrorCode::kEmptyDataset, "no inputs to trace");
  TraceMatrix m;
  m.dim = layout.total;
  m.values.resize(data.size() * m.dim);
  m.labels = data.labels;
  m.ids.resize(data.size());
  m.predicted.resize(data.size());
  parallel_for(data.size(), threads, [&](std::size_t i) {
    const auto p = cnn::probe(model, data.sample(i), layout);
    std::copy(p.trace.begin(), p.trace.end(), m.values.begin() + static_cast<std::ptrdiff_t>(i * m.dim));
    m.ids[i] = i;
    m.predicted[i] = p.predicted;
  });
  return m;
}

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double d = a[j] - b[j];
    s += d * d;
  }
  return s;
}

void check_rows(const TraceMatrix& t) {
  if (t.rows() == 0) fail(ErrorCode::kEmptyDataset, "no reference traces");
  if (t.values.size() != t.rows() * t.dim || t.ids.size() != t.rows()) {
    fail(ErrorCode::kShapeMismatch, "trace matrix is inconsistent");
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// LSA

const ClassDensity* LsaEstimator::find(std::size_t label) const {
  for (const auto& c : classes) {
    if (c.label == label) return &c;
  }
  return nullptr;
}

double scott_bandwidth(double sigma, std::size_t n, std::size_t d) {
  return sigma * std::pow(static_cast<double>(n), -1.0 / (static_cast<double>(d) + 4.0));
}

LsaEstimator fit_lsa_from_traces(const TraceMatrix& traces, double variance_threshold) {
  check_rows(traces);
  if (!(variance_threshold >= 0.0)) {
    fail(ErrorCode::kInvalidArgument, "variance threshold must be non-negative");
  }
  const std::size_t n = traces.rows();
  const std::size_t dim = traces.dim;

  std::map<std::size_t, std::vector<std::size_t>> by_class;
  for (std::size_t r = 0; r < n; ++r) by_class[traces.labels[r]].push_back(r);
  for (const auto& [label, rows] : by_class) {
    if (rows.size() < 2) {
      fail(ErrorCode::kInsufficientClass,
           "class " + std::to_string(label) + " has " + std::to_string(rows.size()) +
               " reference input(s); LSA needs at least 2");
    }
  }

  // Sample variance (n - 1) of each neuron over every reference row.
  std::vector<double> mean(dim, 0.0), var(dim, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    const auto row = traces.row(r);
    for (std::size_t j = 0; j < dim; ++j) mean[j] += row[j];
  }
  for (double& m : mean) m /= static_cast<double>(n);
  for (std::size_t r = 0; r < n; ++r) {
    const auto row = traces.row(r);
    for (std::size_t j = 0; j < dim; ++j) var[j] += (row[j] - mean[j]) * (row[j] - mean[j]);
  }
  LsaEstimator est;
  for (std::size_t j = 0; j < dim; ++j) {
    var[j] /= static_cast<double>(n - 1);
    if (var[j] >= variance_threshold && var[j] > 0.0) est.retained.push_back(j);
  }
  if (est.retained.empty()) {
    fail(ErrorCode::kAllFiltered, "every neuron fell below the variance threshold");
  }
  const std::size_t d = est.retained.size();

  for (const auto& [label, rows] : by_class) {
    ClassDensity c;
    c.label = label;
    c.samples.reserve(rows.size() * d);
    for (std::size_t r : rows) {
      const auto row = traces.row(r);
      for (std::size_t j : est.retained) c.samples.push_back(row[j]);
      c.ids.push_back(traces.ids[r]);
    }
    const std::size_t nc = rows.size();
    c.bandwidth.resize(d);
    for (std::size_t k = 0; k < d; ++k) {
      double m = 0.0;
      for (std::size_t i = 0; i < nc; ++i) m += c.samples[i * d + k];
      m /= static_cast<double>(nc);
      double s = 0.0;
      for (std::size_t i = 0; i < nc; ++i) {
        const double dv = c.samples[i * d + k] - m;
        s += dv * dv;
      }
      double sigma = std::sqrt(s / static_cast<double>(nc - 1));
      // A neuron constant within this class borrows its global spread.
      if (!(sigma > 0.0)) sigma = std::sqrt(var[est.retained[k]]);
      c.bandwidth[k] = scott_bandwidth(sigma, nc, d);
    }
    est.classes.push_back(std::move(c));
  }
  return est;
}

LsaEstimator fit_lsa(const cnn::ModelState& model, const cnn::Dataset& train_star,
                     const std::string& layer, double variance_threshold, std::size_t threads) {
  const std::vector<std::string> layers{layer};
  const auto layout = cnn::trace_layout(model, layers);
  auto est = fit_lsa_from_traces(collect_traces(model, train_star, layout, threads), variance_threshold);
  est.layer = layer;
  return est;
}

double lsa_from_trace(const LsaEstimator& estimator, std::span<const double> trace,
                      std::size_t predicted, std::optional<std::size_t> exclude_id) {
  const ClassDensity* c = estimator.find(predicted);
  if (!c) fail(ErrorCode::kInsufficientClass, "no LSA density for class " + std::to_string(predicted));
  const std::size_t d = estimator.retained.size();
  if (!estimator.retained.empty() && estimator.retained.back() >= trace.size()) {
    fail(ErrorCode::kShapeMismatch, "trace shorter than the estimator's layer");
  }
  std::vector<double> x(d);
  for (std::size_t k = 0; k < d; ++k) x[k] = trace[estimator.retained[k]];

  double log_norm = -0.5 * static_cast<double>(d) * std::log(2.0 * std::numbers::pi);
  for (double h : c->bandwidth) log_norm -= std::log(h);

  std::vector<double> log_k;
  log_k.reserve(c->count());
  for (std::size_t i = 0; i < c->count(); ++i) {
    if (exclude_id && c->ids[i] == *exclude_id) continue;
    const double* s = c->samples.data() + i * d;
    double q = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      const double z = (x[k] - s[k]) / c->bandwidth[k];
      q += z * z;
    }
    log_k.push_back(log_norm - 0.5 * q);
  }
  if (log_k.empty()) fail(ErrorCode::kInsufficientClass, "no reference rows left for class " + std::to_string(predicted));

  const double top = *std::max_element(log_k.begin(), log_k.end());
  double sum = 0.0;
  for (double v : log_k) sum += std::exp(v - top);
  const double log_density = top + std::log(sum) - std::log(static_cast<double>(log_k.size()));
  // -log(density + 1e-300), evaluated in log space.
  const double log_floor = std::log(1e-300);
  const double hi = std::max(log_density, log_floor);
  const double lo = std::min(log_density, log_floor);
  return -(hi + std::log1p(std::exp(lo - hi)));
}

double lsa_score(const LsaEstimator& estimator, const cnn::ModelState& model,
                 const numgrad::Tensor& input) {
  const std::vector<std::string> layers{estimator.layer};
  const auto layout = cnn::trace_layout(model, layers);
  const auto p = cnn::probe(model, input, layout);
  return lsa_from_trace(estimator, p.trace, p.predicted);
}

// ---------------------------------------------------------------------------
// DSA

DsaIndex build_dsa_index(TraceMatrix traces, std::vector<std::string> layers) {
  check_rows(traces);
  DsaIndex index;
  index.layers = std::move(layers);
  std::size_t classes = 0;
  for (std::size_t label : traces.labels) classes = std::max(classes, label + 1);
  index.rows_by_class.assign(classes, {});
  for (std::size_t r = 0; r < traces.rows(); ++r) index.rows_by_class[traces.labels[r]].push_back(r);
  std::size_t populated = 0;
  for (const auto& rows : index.rows_by_class) populated += rows.empty() ? 0 : 1;
  if (populated < 2) fail(ErrorCode::kInsufficientClass, "DSA needs reference traces from at least 2 classes");
  index.traces = std::move(traces);
  return index;
}

DsaIndex fit_dsa(const cnn::ModelState& model, const cnn::Dataset& train_star,
                 const std::vector<std::string>& layers, std::size_t threads) {
  const auto layout = cnn::trace_layout(model, layers);
  return build_dsa_index(collect_traces(model, train_star, layout, threads), layers);
}

namespace {

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

struct Nearest {
  std::size_t row = kNone;
  double sq = std::numeric_limits<double>::infinity();
};

// Nearest row of class `label`, skipping `skip_row`. Ties keep the lower row.
Nearest nearest_in_class(const DsaIndex& index, std::span<const double> x, std::size_t label,
                         std::size_t skip_row) {
  Nearest best;
  if (label >= index.rows_by_class.size()) return best;
  for (std::size_t r : index.rows_by_class[label]) {
    if (r == skip_row) continue;
    const double sq = squared_distance(x, index.traces.row(r));
    if (sq < best.sq) best = {r, sq};
  }
  return best;
}

// Two nearest rows to x outside class `label`, so one exclusion can be honored.
std::pair<Nearest, Nearest> nearest_two_outside(const DsaIndex& index, std::span<const double> x,
                                                std::size_t label) {
  Nearest first, second;
  for (std::size_t c = 0; c < index.rows_by_class.size(); ++c) {
    if (c == label) continue;
    for (std::size_t r : index.rows_by_class[c]) {
      const double sq = squared_distance(x, index.traces.row(r));
      if (sq < first.sq || (sq == first.sq && r < first.row)) {
        second = first;
        first = {r, sq};
      } else if (sq < second.sq || (sq == second.sq && r < second.row)) {
        second = {r, sq};
      }
    }
  }
  return {first, second};
}

std::size_t row_of_id(const DsaIndex& index, std::optional<std::size_t> id) {
  if (!id) return kNone;
  for (std::size_t r = 0; r < index.traces.rows(); ++r) {
    if (index.traces.ids[r] == *id) return r;
  }
  return kNone;
}

DsaResult combine(const Nearest& same, const Nearest& other) {
  DsaResult out;
  out.nearest_same = same.row;
  out.nearest_other = other.row;
  const double numerator = std::sqrt(same.sq);
  const double denominator = std::sqrt(other.sq);
  if (denominator == 0.0) {
    out.degenerate = true;
    out.value = kDsaDegenerateSentinel;
  } else {
    out.value = numerator / denominator;
  }
  return out;
}

}  // namespace

DsaResult dsa_from_trace(const DsaIndex& index, std::span<const double> trace, std::size_t predicted,
                         std::optional<std::size_t> exclude_id) {
  if (trace.size() != index.traces.dim) {
    fail(ErrorCode::kShapeMismatch, "trace length does not match the DSA index");
  }
  const std::size_t skip = row_of_id(index, exclude_id);
  const Nearest same = nearest_in_class(index, trace, predicted, skip);
  if (same.row == kNone) {
    fail(ErrorCode::kInsufficientClass, "no reference traces for predicted class " + std::to_string(predicted));
  }
  auto [first, second] = nearest_two_outside(index, index.traces.row(same.row), predicted);
  const Nearest other = first.row == skip ? second : first;
  if (other.row == kNone) fail(ErrorCode::kInsufficientClass, "no reference traces outside class " + std::to_string(predicted));
  return combine(same, other);
}

double dsa_score(const DsaIndex& index, const cnn::ModelState& model, const numgrad::Tensor& input) {
  const auto layout = cnn::trace_layout(model, index.layers);
  const auto p = cnn::probe(model, input, layout);
  return dsa_from_trace(index, p.trace, p.predicted).value;
}

std::vector<DsaResult> dsa_score_members(const DsaIndex& index, std::size_t threads) {
  const auto& t = index.traces;
  const std::size_t n = t.rows();
  if (t.predicted.size() != n) fail(ErrorCode::kShapeMismatch, "index lacks predicted classes");

  std::vector<Nearest> same(n);
  parallel_for(n, threads, [&](std::size_t r) {
    same[r] = nearest_in_class(index, t.row(r), t.predicted[r], r);
    if (same[r].row == kNone) {
      fail(ErrorCode::kInsufficientClass,
           "no reference traces for predicted class " + std::to_string(t.predicted[r]));
    }
  });

  // x_b only depends on x_a (plus one possible exclusion), so resolve it once
  // per distinct x_a.
  std::vector<std::size_t> anchors;
  std::vector<std::size_t> anchor_slot(n, kNone);
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t a = same[r].row;
    if (anchor_slot[a] == kNone) {
      anchor_slot[a] = anchors.size();
      anchors.push_back(a);
    }
  }
  std::vector<std::pair<Nearest, Nearest>> outside(anchors.size());
  parallel_for(anchors.size(), threads, [&](std::size_t k) {
    const std::size_t a = anchors[k];
    outside[k] = nearest_two_outside(index, t.row(a), t.labels[a]);
  });

  std::vector<DsaResult> out(n);
  for (std::size_t r = 0; r < n; ++r) {
    const auto& [first, second] = outside[anchor_slot[same[r].row]];
    const Nearest other = first.row == r ? second : first;
    if (other.row == kNone) {
      fail(ErrorCode::kInsufficientClass, "no reference traces outside class " + std::to_string(t.predicted[r]));
    }
    out[r] = combine(same[r], other);
  }
  return out;
}

}  // namespace gr::guidance
