#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gr/cnn/dataset.hpp"
#include "gr/cnn/model.hpp"
#include "gr/guidance/coverage.hpp"
#include "gr/guidance/scores.hpp"
#include "gr/guidance/surprise.hpp"

namespace gr::guidance {

struct ScoringConfig {
  NCConfig nc;
  std::string lsa_layer;                 // empty: last hidden dense layer
  double lsa_variance_threshold = kDefaultVarianceThreshold;
  std::vector<std::string> dsa_layers;   // empty: every neuron layer
  std::uint64_t random_seed = 0;
  std::size_t threads = 1;
};

/// Last hidden dense layer of the architecture, the default LSA layer.
std::string default_lsa_layer(const cnn::ArchitectureDescriptor& arch);

struct TimedScores {
  GuidanceScores scores;
  double seconds = 0.0;  // monotonic wall clock
};

/// Scores every Train* input (ids 0..N-1) with `metric` against the original
/// model. LSA and DSA are fitted on Train* itself and score each member
/// leave-one-out. The measured time covers fitting and scoring.
TimedScores timed_scoring(Metric metric, const cnn::ModelState& model,
                          const cnn::Dataset& train_star, const ScoringConfig& config);

/// Rounds up to whole seconds so any measured work shows: 94.2 -> "00:01:35",
/// 0.0002 -> "00:00:01", 0 -> "00:00:00".
std::string format_hms(double seconds);

}  // namespace gr::guidance
