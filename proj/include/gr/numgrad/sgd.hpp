#pragma once

#include <vector>

#include "gr/numgrad/graph.hpp"

namespace gr::numgrad {

struct SgdOptions {
  double learning_rate = 0.01;
  double momentum = 0.9;
};

/// Per-parameter velocity carried between sgd_step calls.
struct Velocity {
  std::vector<Tensor> buffers;

  static Velocity zeros_like(const Graph& graph);
};

/// v <- momentum * v + grad; param <- param - lr * v.
void sgd_step(Graph& graph, const GradientBundle& grads, const SgdOptions& options,
              Velocity& velocity);

}  // namespace gr::numgrad
