#pragma once

#include <span>

#include "gr/cnn/model.hpp"

namespace gr::guidance {

struct NCConfig {
  double threshold = 0.5;  // a neuron is active when its scaled value exceeds this

  void validate() const;
};

/// Fraction of `scaled` values strictly above the threshold.
double coverage_fraction(std::span<const double> scaled, double threshold);

/// Neuron coverage of one trace: each layer segment is min-max scaled to
/// [0, 1] for this input, then neurons above the threshold are counted over
/// the whole layout. A constant layer contributes no active neurons.
double nc_from_trace(std::span<const double> trace, const cnn::TraceLayout& layout,
                     const NCConfig& config);

/// Coverage over every conv and dense hidden neuron of the model.
double nc_score(const cnn::ModelState& model, const numgrad::Tensor& input, const NCConfig& config);

}  // namespace gr::guidance
