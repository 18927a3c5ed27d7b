#include "gr/guidance/coverage.hpp"

#include <algorithm>

#include "gr/error.hpp"

namespace gr::guidance {

void NCConfig::validate() const {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    fail(ErrorCode::kInvalidArgument, "NC threshold must lie in [0, 1]");
  }
}

double coverage_fraction(std::span<const double> scaled, double threshold) {
  if (scaled.empty()) return 0.0;
  const auto active = std::count_if(scaled.begin(), scaled.end(), [&](double v) { return v > threshold; });
  return static_cast<double>(active) / static_cast<double>(scaled.size());
}

double nc_from_trace(std::span<const double> trace, const cnn::TraceLayout& layout,
                     const NCConfig& config) {
  config.validate();
  if (trace.size() != layout.total) {
    fail(ErrorCode::kShapeMismatch, "trace length " + std::to_string(trace.size()) +
                                        " does not match layout " + std::to_string(layout.total));
  }
  std::size_t active = 0;
  for (const auto& seg : layout.segments) {
    const auto values = trace.subspan(seg.offset, seg.length);
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    const double range = *hi - *lo;
    if (!(range > 0.0)) continue;
    for (double v : values) {
      if ((v - *lo) / range > config.threshold) ++active;
    }
  }
  return layout.total ? static_cast<double>(active) / static_cast<double>(layout.total) : 0.0;
}

double nc_score(const cnn::ModelState& model, const numgrad::Tensor& input, const NCConfig& config) {
  const auto layout = cnn::all_neurons_layout(model);
  return nc_from_trace(cnn::probe(model, input, layout).trace, layout, config);
}

}  // namespace gr::guidance
