#include "gr/numgrad/sgd.hpp"

#include <cmath>

#include "gr/error.hpp"

namespace gr::numgrad {

Velocity Velocity::zeros_like(const Graph& graph) {
  Velocity v;
  v.buffers.reserve(graph.parameters().size());
  for (const auto& p : graph.parameters()) v.buffers.emplace_back(p.value.shape());
  return v;
}

void sgd_step(Graph& graph, const GradientBundle& grads, const SgdOptions& options,
              Velocity& velocity) {
  if (!(options.learning_rate > 0.0) || !std::isfinite(options.learning_rate)) {
    fail(ErrorCode::kInvalidArgument, "learning rate must be positive");
  }
  if (!(options.momentum >= 0.0 && options.momentum < 1.0)) {
    fail(ErrorCode::kInvalidArgument, "momentum must lie in [0, 1)");
  }
  auto& params = graph.parameters();
  if (grads.params.size() != params.size()) {
    fail(ErrorCode::kShapeMismatch, "gradient bundle has " + std::to_string(grads.params.size()) +
                                        " entries for " + std::to_string(params.size()) + " parameters");
  }
  if (velocity.buffers.empty()) velocity = Velocity::zeros_like(graph);
  if (velocity.buffers.size() != params.size()) {
    fail(ErrorCode::kShapeMismatch, "velocity state does not match parameters");
  }
  for (std::size_t p = 0; p < params.size(); ++p) {
    Tensor& w = params[p].value;
    const Tensor& g = grads.params[p].value;
    Tensor& v = velocity.buffers[p];
    if (g.shape() != w.shape() || v.shape() != w.shape()) {
      fail(ErrorCode::kShapeMismatch, "gradient for '" + params[p].name + "' has shape " +
                                          shape_string(g.shape()) + ", expected " +
                                          shape_string(w.shape()));
    }
    for (std::size_t k = 0; k < w.size(); ++k) {
      const double vk = options.momentum * static_cast<double>(v[k]) + static_cast<double>(g[k]);
      v[k] = static_cast<float>(vk);
      w[k] = static_cast<float>(static_cast<double>(w[k]) - options.learning_rate * vk);
    }
  }
}

}  // namespace gr::numgrad
