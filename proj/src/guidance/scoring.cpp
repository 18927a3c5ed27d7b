#include "gr/guidance/scoring.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "gr/error.hpp"
#include "gr/parallel.hpp"

namespace gr::guidance {

std::string default_lsa_layer(const cnn::ArchitectureDescriptor& arch) {
  const auto hidden = arch.neuron_layers();
  for (auto it = hidden.rbegin(); it != hidden.rend(); ++it) {
    for (const auto& l : arch.layers) {
      if (l.name == *it && l.kind == cnn::LayerKind::kDense) return *it;
    }
  }
  if (hidden.empty()) fail(ErrorCode::kInvalidArchitecture, "architecture has no hidden layers");
  return hidden.back();
}

namespace {

GuidanceScores score_nc(const cnn::ModelState& model, const cnn::Dataset& data,
                        const ScoringConfig& config) {
  const auto layout = cnn::all_neurons_layout(model);
  GuidanceScores out(data.size());
  parallel_for(data.size(), config.threads, [&](std::size_t i) {
    const auto p = cnn::probe(model, data.sample(i), layout);
    out[i] = {i, Metric::kNC, nc_from_trace(p.trace, layout, config.nc)};
  });
  return out;
}

GuidanceScores score_lsa(const cnn::ModelState& model, const cnn::Dataset& data,
                         const ScoringConfig& config) {
  const std::string layer = config.lsa_layer.empty() ? default_lsa_layer(model.arch) : config.lsa_layer;
  const std::vector<std::string> layers{layer};
  const auto traces = collect_traces(model, data, cnn::trace_layout(model, layers), config.threads);
  auto est = fit_lsa_from_traces(traces, config.lsa_variance_threshold);
  est.layer = layer;
  GuidanceScores out(data.size());
  parallel_for(data.size(), config.threads, [&](std::size_t i) {
    out[i] = {i, Metric::kLSA, lsa_from_trace(est, traces.row(i), traces.predicted[i], traces.ids[i])};
  });
  return out;
}

GuidanceScores score_dsa(const cnn::ModelState& model, const cnn::Dataset& data,
                         const ScoringConfig& config) {
  const auto layers = config.dsa_layers.empty() ? model.arch.neuron_layers() : config.dsa_layers;
  const auto index = fit_dsa(model, data, layers, config.threads);
  const auto results = dsa_score_members(index, config.threads);
  GuidanceScores out(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) out[i] = {i, Metric::kDSA, results[i].value};
  return out;
}

}  // namespace

TimedScores timed_scoring(Metric metric, const cnn::ModelState& model,
                          const cnn::Dataset& train_star, const ScoringConfig& config) {
  if (train_star.size() == 0) fail(ErrorCode::kEmptyDataset, "nothing to score");
  const auto start = std::chrono::steady_clock::now();
  TimedScores out;
  switch (metric) {
    case Metric::kNC: out.scores = score_nc(model, train_star, config); break;
    case Metric::kLSA: out.scores = score_lsa(model, train_star, config); break;
    case Metric::kDSA: out.scores = score_dsa(model, train_star, config); break;
    case Metric::kRandom: {
      std::vector<std::size_t> ids(train_star.size());
      std::iota(ids.begin(), ids.end(), std::size_t{0});
      out.scores = random_score(ids, config.random_seed);
      break;
    }
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

std::string format_hms(double seconds) {
  if (!(seconds >= 0.0) || !std::isfinite(seconds)) {
    fail(ErrorCode::kInvalidArgument, "duration must be finite and non-negative");
  }
  const auto total = static_cast<long long>(std::ceil(seconds));
  char buf[32];
  std::snprintf(buf, sizeof buf, "%02lld:%02lld:%02lld", total / 3600, (total / 60) % 60, total % 60);
  return buf;
}

}  // namespace gr::guidance
