#include "gr/numgrad/graph.hpp"

#include <algorithm>
#include <cmath>

#include "gr/error.hpp"

namespace gr::numgrad {

std::size_t conv_output_extent(std::size_t input, std::size_t kernel, std::size_t stride,
                               Padding padding) {
  if (padding == Padding::kSame) return (input + stride - 1) / stride;
  if (kernel > input) return 0;
  return (input - kernel) / stride + 1;
}

namespace {

std::size_t same_pad_before(std::size_t input, std::size_t output, std::size_t kernel,
                            std::size_t stride) {
  const std::size_t needed = (output - 1) * stride + kernel;
  return needed > input ? (needed - input) / 2 : 0;
}

std::size_t pad_before(const Node& n, std::size_t axis) {
  if (n.padding == Padding::kValid) return 0;
  return same_pad_before(n.in_shape[axis], n.out_shape[axis], n.kernel, n.stride);
}

}  // namespace

Graph::Graph(Shape input_shape, LossKind loss) : input_shape_(std::move(input_shape)), loss_(loss) {
  if (input_shape_.size() != 3) {
    fail(ErrorCode::kShapeMismatch,
         "graph input must be (H, W, C), got " + shape_string(input_shape_));
  }
  for (std::size_t d : input_shape_) {
    if (d == 0) fail(ErrorCode::kShapeMismatch, "zero extent in graph input shape");
  }
}

const Shape& Graph::tail_shape() const {
  return nodes_.empty() ? input_shape_ : nodes_.back().out_shape;
}

const Shape& Graph::output_shape() const { return tail_shape(); }

void Graph::check_new_name(const std::string& name) const {
  if (name.empty()) fail(ErrorCode::kInvalidArchitecture, "node name must be non-empty");
  if (node_index(name) >= 0) fail(ErrorCode::kInvalidArchitecture, "duplicate node name '" + name + "'");
}

int Graph::add_parameter(std::string name, Shape shape) {
  params_.push_back(Parameter{std::move(name), Tensor(std::move(shape))});
  return static_cast<int>(params_.size() - 1);
}

Graph& Graph::conv2d(std::string name, std::size_t filters, std::size_t kernel, std::size_t stride,
                     Padding padding) {
  check_new_name(name);
  const Shape& in = tail_shape();
  if (in.size() != 3) {
    fail(ErrorCode::kShapeMismatch, "node '" + name + "': conv2d needs (H, W, C) input, got " +
                                        shape_string(in));
  }
  if (filters == 0 || kernel == 0) {
    fail(ErrorCode::kInvalidArchitecture, "node '" + name + "': filters and kernel must be positive");
  }
  if (stride != 1 && stride != 2) {
    fail(ErrorCode::kInvalidArchitecture, "node '" + name + "': stride must be 1 or 2");
  }
  const std::size_t h = conv_output_extent(in[0], kernel, stride, padding);
  const std::size_t w = conv_output_extent(in[1], kernel, stride, padding);
  if (h == 0 || w == 0) {
    fail(ErrorCode::kShapeMismatch, "node '" + name + "': kernel " + std::to_string(kernel) +
                                        " does not fit input " + shape_string(in));
  }
  Node n;
  n.name = name;
  n.kind = OpKind::kConv2d;
  n.filters = filters;
  n.kernel = kernel;
  n.stride = stride;
  n.padding = padding;
  n.in_shape = in;
  n.out_shape = {h, w, filters};
  n.weight = add_parameter(name + ".weight", {kernel, kernel, in[2], filters});
  n.bias = add_parameter(name + ".bias", {filters});
  nodes_.push_back(std::move(n));
  return *this;
}

Graph& Graph::maxpool2d(std::string name, std::size_t size) {
  check_new_name(name);
  const Shape& in = tail_shape();
  if (in.size() != 3) {
    fail(ErrorCode::kShapeMismatch, "node '" + name + "': maxpool2d needs (H, W, C) input, got " +
                                        shape_string(in));
  }
  if (size == 0 || size > in[0] || size > in[1]) {
    fail(ErrorCode::kShapeMismatch, "node '" + name + "': pool size " + std::to_string(size) +
                                        " does not fit input " + shape_string(in));
  }
  Node n;
  n.name = name;
  n.kind = OpKind::kMaxPool2d;
  n.pool = size;
  n.in_shape = in;
  n.out_shape = {in[0] / size, in[1] / size, in[2]};
  nodes_.push_back(std::move(n));
  return *this;
}

Graph& Graph::dense(std::string name, std::size_t units) {
  check_new_name(name);
  if (units == 0) fail(ErrorCode::kInvalidArchitecture, "node '" + name + "': units must be positive");
  const Shape in = tail_shape();
  Node n;
  n.name = name;
  n.kind = OpKind::kDense;
  n.units = units;
  n.in_shape = in;
  n.out_shape = {units};
  n.weight = add_parameter(name + ".weight", {element_count(in), units});
  n.bias = add_parameter(name + ".bias", {units});
  nodes_.push_back(std::move(n));
  return *this;
}

Graph& Graph::relu(std::string name) {
  check_new_name(name);
  Node n;
  n.name = name;
  n.kind = OpKind::kRelu;
  n.in_shape = tail_shape();
  n.out_shape = n.in_shape;
  nodes_.push_back(std::move(n));
  return *this;
}

int Graph::node_index(std::string_view name) const {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

const Node& Graph::node(std::string_view name) const {
  const int i = node_index(name);
  if (i < 0) fail(ErrorCode::kUnknownLayer, "no node named '" + std::string(name) + "'");
  return nodes_[static_cast<std::size_t>(i)];
}

Tensor& Graph::parameter(std::string_view name) {
  for (auto& p : params_) {
    if (p.name == name) return p.value;
  }
  fail(ErrorCode::kUnknownLayer, "no parameter named '" + std::string(name) + "'");
}

const Tensor& Graph::parameter(std::string_view name) const {
  return const_cast<Graph*>(this)->parameter(name);
}

std::size_t Graph::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

// ---------------------------------------------------------------------------
// Forward kernels. Reductions accumulate in double and store float.

namespace {

void conv_forward(const Node& n, const float* in, const float* w, const float* b, float* out) {
  const std::size_t H = n.in_shape[0], W = n.in_shape[1], Ci = n.in_shape[2];
  const std::size_t Ho = n.out_shape[0], Wo = n.out_shape[1], Co = n.out_shape[2];
  const std::size_t K = n.kernel, S = n.stride;
  const std::size_t pt = pad_before(n, 0), pl = pad_before(n, 1);
  std::vector<double> acc(Co);
  for (std::size_t oy = 0; oy < Ho; ++oy) {
    for (std::size_t ox = 0; ox < Wo; ++ox) {
      for (std::size_t co = 0; co < Co; ++co) acc[co] = b[co];
      for (std::size_t ky = 0; ky < K; ++ky) {
        const std::size_t iy_raw = oy * S + ky;
        if (iy_raw < pt || iy_raw - pt >= H) continue;
        const std::size_t iy = iy_raw - pt;
        for (std::size_t kx = 0; kx < K; ++kx) {
          const std::size_t ix_raw = ox * S + kx;
          if (ix_raw < pl || ix_raw - pl >= W) continue;
          const std::size_t ix = ix_raw - pl;
          const float* ip = in + (iy * W + ix) * Ci;
          const float* wp = w + (ky * K + kx) * Ci * Co;
          for (std::size_t ci = 0; ci < Ci; ++ci) {
            const double v = ip[ci];
            if (v == 0.0) continue;
            const float* wrow = wp + ci * Co;
            for (std::size_t co = 0; co < Co; ++co) acc[co] += v * static_cast<double>(wrow[co]);
          }
        }
      }
      float* op = out + (oy * Wo + ox) * Co;
      for (std::size_t co = 0; co < Co; ++co) op[co] = static_cast<float>(acc[co]);
    }
  }
}

void maxpool_forward(const Node& n, const float* in, float* out, std::vector<std::uint32_t>& argmax) {
  const std::size_t W = n.in_shape[1], C = n.in_shape[2];
  const std::size_t Ho = n.out_shape[0], Wo = n.out_shape[1];
  const std::size_t P = n.pool;
  argmax.assign(Ho * Wo * C, 0);
  for (std::size_t oy = 0; oy < Ho; ++oy) {
    for (std::size_t ox = 0; ox < Wo; ++ox) {
      for (std::size_t c = 0; c < C; ++c) {
        std::size_t best = (oy * P * W + ox * P) * C + c;
        for (std::size_t py = 0; py < P; ++py) {
          for (std::size_t px = 0; px < P; ++px) {
            const std::size_t idx = ((oy * P + py) * W + (ox * P + px)) * C + c;
            if (in[idx] > in[best]) best = idx;  // first maximum wins ties
          }
        }
        const std::size_t o = (oy * Wo + ox) * C + c;
        out[o] = in[best];
        argmax[o] = static_cast<std::uint32_t>(best);
      }
    }
  }
}

void dense_forward(const Node& n, const float* in, std::size_t in_size, const float* w,
                   const float* b, float* out) {
  const std::size_t U = n.units;
  std::vector<double> acc(b, b + U);
  for (std::size_t i = 0; i < in_size; ++i) {
    const double v = in[i];
    if (v == 0.0) continue;
    const float* row = w + i * U;
    for (std::size_t u = 0; u < U; ++u) acc[u] += v * static_cast<double>(row[u]);
  }
  for (std::size_t u = 0; u < U; ++u) out[u] = static_cast<float>(acc[u]);
}

void check_input(const Graph& graph, const Tensor& input) {
  if (input.shape() != graph.input_shape()) {
    fail(ErrorCode::kShapeMismatch, "node 'input': expected " + shape_string(graph.input_shape()) +
                                        ", got " + shape_string(input.shape()));
  }
}

void check_parameters(const Graph& graph) {
  for (const auto& p : graph.parameters()) {
    if (!p.value.all_finite()) fail(ErrorCode::kNonFinite, "parameter '" + p.name + "' is not finite");
  }
}

void run_nodes(const Graph& graph, ForwardState& state) {
  const auto& nodes = graph.nodes();
  const auto& params = graph.parameters();
  state.activations.resize(nodes.size() + 1);
  state.pool_argmax.assign(nodes.size(), {});
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const Node& n = nodes[i];
    const Tensor& in = state.activations[i];
    Tensor out(n.out_shape);
    switch (n.kind) {
      case OpKind::kConv2d:
        conv_forward(n, in.data(), params[n.weight].value.data(), params[n.bias].value.data(),
                     out.data());
        break;
      case OpKind::kMaxPool2d:
        maxpool_forward(n, in.data(), out.data(), state.pool_argmax[i]);
        break;
      case OpKind::kDense:
        dense_forward(n, in.data(), in.size(), params[n.weight].value.data(),
                      params[n.bias].value.data(), out.data());
        break;
      case OpKind::kRelu:
        for (std::size_t k = 0; k < in.size(); ++k) out[k] = in[k] > 0.0f ? in[k] : 0.0f;
        break;
    }
    state.activations[i + 1] = std::move(out);
  }
}

}  // namespace

ForwardState forward_eval(const Graph& graph, const Tensor& input, std::size_t label) {
  check_input(graph, input);
  check_parameters(graph);
  if (graph.nodes().empty() && graph.loss() == LossKind::kSoftmaxCrossEntropy) {
    fail(ErrorCode::kInvalidArchitecture, "cross-entropy head needs at least one node");
  }
  ForwardState state;
  state.activations.reserve(graph.nodes().size() + 1);
  state.activations.push_back(input);
  run_nodes(graph, state);

  const Tensor& logits = state.activations.back();
  if (graph.loss() == LossKind::kSoftmaxCrossEntropy) {
    if (label >= logits.size()) {
      fail(ErrorCode::kInvalidArgument, "label " + std::to_string(label) + " out of range for " +
                                            std::to_string(logits.size()) + " classes");
    }
    double top = logits[0];
    for (std::size_t k = 1; k < logits.size(); ++k) top = std::max(top, static_cast<double>(logits[k]));
    double total = 0.0;
    state.probabilities.resize(logits.size());
    for (std::size_t k = 0; k < logits.size(); ++k) {
      state.probabilities[k] = std::exp(static_cast<double>(logits[k]) - top);
      total += state.probabilities[k];
    }
    for (double& p : state.probabilities) p /= total;
    state.loss = std::log(total) + top - static_cast<double>(logits[label]);
    state.label = label;
  } else {
    double total = 0.0;
    for (float v : logits.values()) total += v;
    state.loss = total;
  }
  if (!std::isfinite(state.loss)) fail(ErrorCode::kNonFinite, "loss is not finite");
  state.node_count = graph.nodes().size();
  state.valid = true;
  return state;
}

Tensor forward_logits(const Graph& graph, const Tensor& input) {
  check_input(graph, input);
  check_parameters(graph);
  ForwardState state;
  state.activations.reserve(graph.nodes().size() + 1);
  state.activations.push_back(input);
  run_nodes(graph, state);
  return std::move(state.activations.back());
}

// ---------------------------------------------------------------------------
// Backward.

const Tensor& GradientBundle::operator[](std::string_view name) const {
  for (const auto& p : params) {
    if (p.name == name) return p.value;
  }
  fail(ErrorCode::kUnknownLayer, "no gradient for parameter '" + std::string(name) + "'");
}

void GradientBundle::zero() {
  for (auto& p : params) p.value.fill(0.0f);
  if (input.size()) input.fill(0.0f);
}

GradientBundle zero_gradients(const Graph& graph) {
  GradientBundle bundle;
  bundle.params.reserve(graph.parameters().size());
  for (const auto& p : graph.parameters()) {
    bundle.params.push_back(Parameter{p.name, Tensor(p.value.shape())});
  }
  bundle.input = Tensor(graph.input_shape());
  return bundle;
}

namespace {

void conv_backward(const Node& n, const float* in, const float* w, const std::vector<double>& gout,
                   std::vector<double>& gin, std::vector<double>& gw, std::vector<double>& gb) {
  const std::size_t H = n.in_shape[0], W = n.in_shape[1], Ci = n.in_shape[2];
  const std::size_t Ho = n.out_shape[0], Wo = n.out_shape[1], Co = n.out_shape[2];
  const std::size_t K = n.kernel, S = n.stride;
  const std::size_t pt = pad_before(n, 0), pl = pad_before(n, 1);
  gin.assign(H * W * Ci, 0.0);
  for (std::size_t oy = 0; oy < Ho; ++oy) {
    for (std::size_t ox = 0; ox < Wo; ++ox) {
      const double* g = gout.data() + (oy * Wo + ox) * Co;
      bool any = false;
      for (std::size_t co = 0; co < Co; ++co) {
        gb[co] += g[co];
        any = any || g[co] != 0.0;
      }
      if (!any) continue;
      for (std::size_t ky = 0; ky < K; ++ky) {
        const std::size_t iy_raw = oy * S + ky;
        if (iy_raw < pt || iy_raw - pt >= H) continue;
        const std::size_t iy = iy_raw - pt;
        for (std::size_t kx = 0; kx < K; ++kx) {
          const std::size_t ix_raw = ox * S + kx;
          if (ix_raw < pl || ix_raw - pl >= W) continue;
          const std::size_t ix = ix_raw - pl;
          const std::size_t in_base = (iy * W + ix) * Ci;
          const std::size_t w_base = (ky * K + kx) * Ci * Co;
          for (std::size_t ci = 0; ci < Ci; ++ci) {
            const double v = in[in_base + ci];
            const float* wrow = w + w_base + ci * Co;
            double* gwrow = gw.data() + w_base + ci * Co;
            double dot = 0.0;
            for (std::size_t co = 0; co < Co; ++co) {
              gwrow[co] += v * g[co];
              dot += static_cast<double>(wrow[co]) * g[co];
            }
            gin[in_base + ci] += dot;
          }
        }
      }
    }
  }
}

void dense_backward(const Node& n, const float* in, std::size_t in_size, const float* w,
                    const std::vector<double>& gout, std::vector<double>& gin,
                    std::vector<double>& gw, std::vector<double>& gb) {
  const std::size_t U = n.units;
  gin.assign(in_size, 0.0);
  for (std::size_t u = 0; u < U; ++u) gb[u] += gout[u];
  for (std::size_t i = 0; i < in_size; ++i) {
    const double v = in[i];
    const float* row = w + i * U;
    double* grow = gw.data() + i * U;
    double dot = 0.0;
    for (std::size_t u = 0; u < U; ++u) {
      grow[u] += v * gout[u];
      dot += static_cast<double>(row[u]) * gout[u];
    }
    gin[i] = dot;
  }
}

// Adds parameter gradients into `sums` (one double buffer per parameter) and
// returns the gradient with respect to the input.
std::vector<double> backward_core(const Graph& graph, const ForwardState& state,
                                  std::vector<std::vector<double>>& sums) {
  if (!state.valid) fail(ErrorCode::kNoForwardPass, "backward called without a forward pass");
  const auto& nodes = graph.nodes();
  if (state.node_count != nodes.size() || state.activations.size() != nodes.size() + 1) {
    fail(ErrorCode::kNoForwardPass, "forward state does not belong to this graph");
  }
  const auto& params = graph.parameters();

  const Tensor& logits = state.activations.back();
  std::vector<double> grad(logits.size());
  if (graph.loss() == LossKind::kSoftmaxCrossEntropy) {
    for (std::size_t k = 0; k < grad.size(); ++k) grad[k] = state.probabilities[k];
    grad[state.label] -= 1.0;
  } else {
    std::fill(grad.begin(), grad.end(), 1.0);
  }

  std::vector<double> next;
  for (std::size_t i = nodes.size(); i-- > 0;) {
    const Node& n = nodes[i];
    const Tensor& in = state.activations[i];
    switch (n.kind) {
      case OpKind::kConv2d:
        conv_backward(n, in.data(), params[n.weight].value.data(), grad, next, sums[n.weight],
                      sums[n.bias]);
        break;
      case OpKind::kDense:
        dense_backward(n, in.data(), in.size(), params[n.weight].value.data(), grad, next,
                       sums[n.weight], sums[n.bias]);
        break;
      case OpKind::kMaxPool2d: {
        next.assign(in.size(), 0.0);
        const auto& argmax = state.pool_argmax[i];
        for (std::size_t o = 0; o < argmax.size(); ++o) next[argmax[o]] += grad[o];
        break;
      }
      case OpKind::kRelu:
        next.resize(in.size());
        for (std::size_t k = 0; k < in.size(); ++k) next[k] = in[k] > 0.0f ? grad[k] : 0.0;
        break;
    }
    grad.swap(next);
  }
  return grad;
}

std::vector<std::vector<double>> zero_sums(const Graph& graph) {
  std::vector<std::vector<double>> sums;
  sums.reserve(graph.parameters().size());
  for (const auto& p : graph.parameters()) sums.emplace_back(p.value.size(), 0.0);
  return sums;
}

}  // namespace

GradientBundle backward_grads(const Graph& graph, const ForwardState& state) {
  auto sums = zero_sums(graph);
  const std::vector<double> input_grad = backward_core(graph, state, sums);
  GradientBundle bundle = zero_gradients(graph);
  for (std::size_t p = 0; p < sums.size(); ++p) {
    float* dst = bundle.params[p].value.data();
    for (std::size_t k = 0; k < sums[p].size(); ++k) dst[k] = static_cast<float>(sums[p][k]);
  }
  for (std::size_t k = 0; k < input_grad.size(); ++k) bundle.input[k] = static_cast<float>(input_grad[k]);
  return bundle;
}

GradientAccumulator::GradientAccumulator(const Graph& graph) : sums_(zero_sums(graph)) {}

std::vector<double> GradientAccumulator::add(const Graph& graph, const ForwardState& state) {
  if (sums_.size() != graph.parameters().size()) {
    fail(ErrorCode::kShapeMismatch, "accumulator does not match graph parameters");
  }
  auto input_grad = backward_core(graph, state, sums_);
  ++count_;
  return input_grad;
}

GradientBundle GradientAccumulator::mean(const Graph& graph) const {
  GradientBundle bundle = zero_gradients(graph);
  const double scale = count_ ? 1.0 / static_cast<double>(count_) : 0.0;
  for (std::size_t p = 0; p < sums_.size(); ++p) {
    float* dst = bundle.params[p].value.data();
    for (std::size_t k = 0; k < sums_[p].size(); ++k) dst[k] = static_cast<float>(sums_[p][k] * scale);
  }
  return bundle;
}

void GradientAccumulator::reset() {
  for (auto& s : sums_) std::fill(s.begin(), s.end(), 0.0);
  count_ = 0;
}

}  // namespace gr::numgrad
