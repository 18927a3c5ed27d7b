#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "gr/numgrad/tensor.hpp"

namespace gr::numgrad {

enum class OpKind { kConv2d, kMaxPool2d, kDense, kRelu };
enum class Padding { kValid, kSame };

/// Head applied to the last node's output. kSoftmaxCrossEntropy is the
/// training cost; kSum (loss = sum of outputs) exists for gradient checks.
enum class LossKind { kSoftmaxCrossEntropy, kSum };

struct Node {
  std::string name;
  OpKind kind = OpKind::kRelu;
  std::size_t filters = 0;  // conv
  std::size_t kernel = 0;   // conv
  std::size_t stride = 1;   // conv
  Padding padding = Padding::kValid;
  std::size_t pool = 0;   // maxpool window and stride
  std::size_t units = 0;  // dense
  Shape in_shape;
  Shape out_shape;
  int weight = -1;  // index into Graph::parameters(), -1 if none
  int bias = -1;
};

struct Parameter {
  std::string name;
  Tensor value;
};

/// A straight-line network over (H, W, C) inputs. Nodes are appended in
/// evaluation order, so the node list is its own topological order; each
/// node's shapes are resolved when it is appended.
class Graph {
 public:
  Graph() = default;
  explicit Graph(Shape input_shape, LossKind loss = LossKind::kSoftmaxCrossEntropy);

  Graph& conv2d(std::string name, std::size_t filters, std::size_t kernel, std::size_t stride,
                Padding padding);
  Graph& maxpool2d(std::string name, std::size_t size);
  Graph& dense(std::string name, std::size_t units);
  Graph& relu(std::string name);

  const Shape& input_shape() const noexcept { return input_shape_; }
  const Shape& output_shape() const;
  LossKind loss() const noexcept { return loss_; }
  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  const Node& node(std::string_view name) const;
  int node_index(std::string_view name) const;

  std::vector<Parameter>& parameters() noexcept { return params_; }
  const std::vector<Parameter>& parameters() const noexcept { return params_; }
  Tensor& parameter(std::string_view name);
  const Tensor& parameter(std::string_view name) const;
  std::size_t parameter_count() const;

 private:
  const Shape& tail_shape() const;
  void check_new_name(const std::string& name) const;
  int add_parameter(std::string name, Shape shape);

  Shape input_shape_;
  LossKind loss_ = LossKind::kSoftmaxCrossEntropy;
  std::vector<Node> nodes_;
  std::vector<Parameter> params_;
};

/// Conv output extent for one spatial axis.
std::size_t conv_output_extent(std::size_t input, std::size_t kernel, std::size_t stride,
                               Padding padding);

/// Everything the backward pass needs: activations[0] is the input,
/// activations[i + 1] the output of node i.
struct ForwardState {
  std::vector<Tensor> activations;
  std::vector<std::vector<std::uint32_t>> pool_argmax;  // per node; empty unless maxpool
  std::vector<double> probabilities;                    // softmax of logits (cross-entropy head)
  std::size_t label = 0;
  double loss = 0.0;
  std::size_t node_count = 0;
  bool valid = false;

  const Tensor& logits() const { return activations.back(); }
};

/// Runs the graph on one input and evaluates the loss head against `label`
/// (ignored for LossKind::kSum).
ForwardState forward_eval(const Graph& graph, const Tensor& input, std::size_t label);

/// Inference-only pass: logits without loss bookkeeping.
Tensor forward_logits(const Graph& graph, const Tensor& input);

struct GradientBundle {
  std::vector<Parameter> params;  // same names, order and shapes as the graph's
  Tensor input;

  const Tensor& operator[](std::string_view name) const;
  void zero();
};

GradientBundle zero_gradients(const Graph& graph);

/// Exact reverse-mode gradients of the loss for the recorded forward pass.
GradientBundle backward_grads(const Graph& graph, const ForwardState& state);

/// Mini-batch gradient sum held in double precision.
class GradientAccumulator {
 public:
  explicit GradientAccumulator(const Graph& graph);

  /// Adds one sample's parameter gradients; returns that sample's input gradient.
  std::vector<double> add(const Graph& graph, const ForwardState& state);
  std::size_t count() const noexcept { return count_; }
  /// Average over the accumulated samples, as a float bundle.
  GradientBundle mean(const Graph& graph) const;
  void reset();

 private:
  std::vector<std::vector<double>> sums_;
  std::size_t count_ = 0;
};

}  // namespace gr::numgrad
