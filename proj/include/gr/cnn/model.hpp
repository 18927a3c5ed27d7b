#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gr/cnn/architecture.hpp"
#include "gr/cnn/dataset.hpp"
#include "gr/numgrad/graph.hpp"

namespace gr::cnn {

struct EpochLoss {
  std::size_t epoch = 0;
  double loss = 0.0;

  friend bool operator==(const EpochLoss&, const EpochLoss&) = default;
};

/// A classifier: its descriptor, the realized graph holding every trainable
/// weight, and where those weights came from.
struct ModelState {
  ArchitectureDescriptor arch;
  numgrad::Graph graph;
  std::uint64_t init_seed = 0;
  std::vector<EpochLoss> history;
};

/// He-uniform weights drawn from PCG32(seed) in parameter order; zero biases.
ModelState build_model(const ArchitectureDescriptor& arch, std::uint64_t seed);

/// True when both models hold bit-identical parameters.
bool same_weights(const ModelState& a, const ModelState& b);

struct TrainOptions {
  std::size_t epochs = 20;
  std::size_t batch_size = 32;
  double learning_rate = 0.01;
  double momentum = 0.9;
  std::uint64_t shuffle_seed = 0;
};

/// Mini-batch SGD with momentum; batch order drawn from PCG32(shuffle_seed).
/// Returns a new model and leaves `model` untouched.
ModelState train(const ModelState& model, const Dataset& data, const TrainOptions& options);

/// Same, restricted to data rows `indices` (the epoch shuffle permutes them).
ModelState train(const ModelState& model, const Dataset& data, std::span<const std::size_t> indices,
                 const TrainOptions& options);

struct Predictions {
  std::vector<std::size_t> labels;
  numgrad::Tensor probabilities;  // (N, classes)
};

/// Accepts a single (H, W, C) image or a batch (N, H, W, C). Ties in the
/// softmax output go to the lowest class index.
Predictions predict(const ModelState& model, const numgrad::Tensor& images);
std::size_t predict_label(const ModelState& model, const numgrad::Tensor& image);
std::size_t argmax_lowest(std::span<const float> values);

/// Fraction of rows whose predicted label equals the true label.
double accuracy(const ModelState& model, const Dataset& data, std::size_t threads = 1);

struct ActivationTrace {
  std::size_t input_id = 0;
  std::vector<double> values;
};

/// Where each selected layer sits inside a concatenated trace. Segment order
/// follows the architecture, whatever order the layers were requested in.
struct TraceLayout {
  struct Segment {
    std::string layer;
    std::size_t node = 0;  // graph node whose output is read (post-activation)
    std::size_t offset = 0;
    std::size_t length = 0;
  };
  std::vector<Segment> segments;
  std::size_t total = 0;
};

/// Throws kUnknownLayer for identifiers that are not neuron layers.
TraceLayout trace_layout(const ModelState& model, std::span<const std::string> layers);
TraceLayout all_neurons_layout(const ModelState& model);

/// One forward pass yielding the trace and the predicted class.
struct Probe {
  std::vector<double> trace;
  std::size_t predicted = 0;
};

Probe probe(const ModelState& model, const numgrad::Tensor& input, const TraceLayout& layout);

ActivationTrace activation_trace(const ModelState& model, const numgrad::Tensor& input,
                                 std::span<const std::string> layers, std::size_t input_id = 0);

}  // namespace gr::cnn
