#include "gr/cnn/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "gr/error.hpp"
#include "gr/numgrad/sgd.hpp"
#include "gr/parallel.hpp"
#include "gr/pcg32.hpp"

namespace gr::cnn {

using numgrad::Graph;
using numgrad::Tensor;

ModelState build_model(const ArchitectureDescriptor& arch, std::uint64_t seed) {
  arch.validate();
  ModelState m;
  m.arch = arch;
  m.graph = arch.to_graph();
  m.init_seed = seed;
  Pcg32 rng(seed);
  for (const auto& node : m.graph.nodes()) {
    if (node.weight < 0) continue;
    Tensor& w = m.graph.parameters()[node.weight].value;
    const std::size_t fan_in = w.size() / node.out_shape.back();
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (std::size_t k = 0; k < w.size(); ++k) {
      w[k] = static_cast<float>((2.0 * rng.uniform() - 1.0) * limit);
    }
  }
  return m;
}

bool same_weights(const ModelState& a, const ModelState& b) {
  const auto& pa = a.graph.parameters();
  const auto& pb = b.graph.parameters();
  if (pa.size() != pb.size()) return false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    if (pa[i].value.shape() != pb[i].value.shape()) return false;
    const auto va = pa[i].value.values();
    const auto vb = pb[i].value.values();
    // Bitwise, so -0.0f and 0.0f differ.
    if (!std::equal(va.begin(), va.end(), vb.begin(), [](float x, float y) {
          return std::bit_cast<std::uint32_t>(x) == std::bit_cast<std::uint32_t>(y);
        })) {
      return false;
    }
  }
  return true;
}

namespace {

void check_compatible(const ModelState& model, const Dataset& data) {
  if (data.size() == 0) fail(ErrorCode::kEmptyDataset, "dataset has no samples");
  if (data.sample_shape() != model.graph.input_shape()) {
    fail(ErrorCode::kShapeMismatch, "dataset samples " + numgrad::shape_string(data.sample_shape()) +
                                        " do not match model input " +
                                        numgrad::shape_string(model.graph.input_shape()));
  }
  if (data.class_count != model.arch.classes) {
    fail(ErrorCode::kInvalidArgument, "dataset has " + std::to_string(data.class_count) +
                                          " classes, model head has " +
                                          std::to_string(model.arch.classes));
  }
}

}  // namespace

ModelState train(const ModelState& model, const Dataset& data, const TrainOptions& options) {
  std::vector<std::size_t> all(data.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return train(model, data, all, options);
}

ModelState train(const ModelState& model, const Dataset& data, std::span<const std::size_t> indices,
                 const TrainOptions& options) {
  check_compatible(model, data);
  if (indices.empty()) fail(ErrorCode::kEmptyDataset, "no training rows selected");
  if (options.batch_size == 0) fail(ErrorCode::kInvalidArgument, "batch size must be positive");
  const numgrad::SgdOptions sgd{options.learning_rate, options.momentum};
  if (options.epochs > 0) {
    if (!(sgd.learning_rate > 0.0)) fail(ErrorCode::kInvalidArgument, "learning rate must be positive");
    if (!(sgd.momentum >= 0.0 && sgd.momentum < 1.0)) {
      fail(ErrorCode::kInvalidArgument, "momentum must lie in [0, 1)");
    }
  }

  ModelState out = model;
  std::vector<std::size_t> order(indices.begin(), indices.end());
  Pcg32 rng(options.shuffle_seed);
  numgrad::Velocity velocity = numgrad::Velocity::zeros_like(out.graph);
  numgrad::GradientAccumulator accum(out.graph);
  const std::size_t first_epoch = out.history.empty() ? 1 : out.history.back().epoch + 1;

  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
      const std::size_t stop = std::min(order.size(), start + options.batch_size);
      accum.reset();
      for (std::size_t k = start; k < stop; ++k) {
        const std::size_t row = order[k];
        const auto state = numgrad::forward_eval(out.graph, data.sample(row), data.labels[row]);
        loss_sum += state.loss;
        accum.add(out.graph, state);
      }
      numgrad::sgd_step(out.graph, accum.mean(out.graph), sgd, velocity);
    }
    out.history.push_back({first_epoch + epoch, loss_sum / static_cast<double>(order.size())});
  }
  return out;
}

std::size_t argmax_lowest(std::span<const float> values) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < values.size(); ++k) {
    if (values[k] > values[best]) best = k;
  }
  return best;
}

std::size_t predict_label(const ModelState& model, const Tensor& image) {
  const Tensor logits = numgrad::forward_logits(model.graph, image);
  return argmax_lowest(logits.values());
}

Predictions predict(const ModelState& model, const Tensor& images) {
  const auto& in_shape = model.graph.input_shape();
  std::size_t count = 0;
  if (images.shape() == in_shape) {
    count = 1;
  } else if (images.rank() == 4 && numgrad::Shape(images.shape().begin() + 1, images.shape().end()) == in_shape) {
    count = images.shape()[0];
  } else {
    fail(ErrorCode::kShapeMismatch, "images " + numgrad::shape_string(images.shape()) +
                                        " do not match model input " + numgrad::shape_string(in_shape));
  }
  const std::size_t n = numgrad::element_count(in_shape);
  const std::size_t classes = model.arch.classes;
  Predictions out;
  out.labels.resize(count);
  out.probabilities = Tensor({count, classes});
  for (std::size_t i = 0; i < count; ++i) {
    const auto pix = images.values().subspan(i * n, n);
    const Tensor logits = numgrad::forward_logits(model.graph, Tensor(in_shape, {pix.begin(), pix.end()}));
    double top = logits[0];
    for (std::size_t k = 1; k < classes; ++k) top = std::max(top, static_cast<double>(logits[k]));
    std::vector<double> e(classes);
    double total = 0.0;
    for (std::size_t k = 0; k < classes; ++k) {
      e[k] = std::exp(static_cast<double>(logits[k]) - top);
      total += e[k];
    }
    for (std::size_t k = 0; k < classes; ++k) {
      out.probabilities[i * classes + k] = static_cast<float>(e[k] / total);
    }
    out.labels[i] = argmax_lowest(logits.values());
  }
  return out;
}

double accuracy(const ModelState& model, const Dataset& data, std::size_t threads) {
  check_compatible(model, data);
  std::vector<unsigned char> hit(data.size(), 0);
  parallel_for(data.size(), threads, [&](std::size_t i) {
    hit[i] = predict_label(model, data.sample(i)) == data.labels[i] ? 1 : 0;
  });
  const auto correct = static_cast<std::size_t>(std::count(hit.begin(), hit.end(), 1));
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

TraceLayout trace_layout(const ModelState& model, std::span<const std::string> layers) {
  const auto neuron = model.arch.neuron_layers();
  for (const auto& name : layers) {
    if (std::find(neuron.begin(), neuron.end(), name) == neuron.end()) {
      fail(ErrorCode::kUnknownLayer, "'" + name + "' is not a traceable layer");
    }
  }
  if (layers.empty()) fail(ErrorCode::kInvalidArgument, "no layers selected for tracing");
  const auto& nodes = model.graph.nodes();
  TraceLayout layout;
  for (const auto& name : neuron) {
    if (std::find(layers.begin(), layers.end(), name) == layers.end()) continue;
    std::size_t node = static_cast<std::size_t>(model.graph.node_index(name));
    if (node + 1 < nodes.size() && nodes[node + 1].kind == numgrad::OpKind::kRelu) ++node;
    const std::size_t length = numgrad::element_count(nodes[node].out_shape);
    layout.segments.push_back({name, node, layout.total, length});
    layout.total += length;
  }
  return layout;
}

TraceLayout all_neurons_layout(const ModelState& model) {
  const auto names = model.arch.neuron_layers();
  return trace_layout(model, names);
}

Probe probe(const ModelState& model, const Tensor& input, const TraceLayout& layout) {
  const auto state = numgrad::forward_eval(model.graph, input, 0);
  Probe p;
  p.trace.resize(layout.total);
  for (const auto& seg : layout.segments) {
    const Tensor& act = state.activations[seg.node + 1];
    for (std::size_t k = 0; k < seg.length; ++k) p.trace[seg.offset + k] = act[k];
  }
  p.predicted = argmax_lowest(state.logits().values());
  return p;
}

ActivationTrace activation_trace(const ModelState& model, const Tensor& input,
                                 std::span<const std::string> layers, std::size_t input_id) {
  const TraceLayout layout = trace_layout(model, layers);
  return ActivationTrace{input_id, probe(model, input, layout).trace};
}

}  // namespace gr::cnn
