#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "gr/numgrad/graph.hpp"

namespace gr::cnn {

enum class LayerKind { kConv, kMaxPool, kDense, kRelu };

struct LayerSpec {
  std::string name;
  LayerKind kind = LayerKind::kRelu;
  std::size_t filters = 0;
  std::size_t kernel = 0;
  std::size_t stride = 1;
  numgrad::Padding padding = numgrad::Padding::kSame;
  std::size_t pool = 0;
  std::size_t units = 0;

  static LayerSpec conv(std::string name, std::size_t filters, std::size_t kernel,
                        std::size_t stride = 1, numgrad::Padding padding = numgrad::Padding::kSame);
  static LayerSpec maxpool(std::string name, std::size_t size);
  static LayerSpec dense(std::string name, std::size_t units);
  static LayerSpec relu(std::string name);

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

/// Input geometry plus an ordered layer list ending in dense(classes); the
/// softmax head is implicit.
struct ArchitectureDescriptor {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;
  std::size_t classes = 0;
  std::vector<LayerSpec> layers;

  /// conv(8)-relu-pool-conv(16)-relu-pool-dense(32)-relu-dense(classes).
  static ArchitectureDescriptor desk_default(std::size_t height, std::size_t width,
                                             std::size_t channels, std::size_t classes);

  numgrad::Shape input_shape() const { return {height, width, channels}; }

  /// Throws kInvalidArchitecture (or kShapeMismatch from graph construction)
  /// when the descriptor cannot be realized.
  void validate() const;
  numgrad::Graph to_graph() const;

  /// Conv and dense layers other than the output head, in architecture order.
  /// These are the neurons N counted by coverage and traced by surprise metrics.
  std::vector<std::string> neuron_layers() const;

  friend bool operator==(const ArchitectureDescriptor&, const ArchitectureDescriptor&) = default;
};

nlohmann::json to_json(const ArchitectureDescriptor& arch);
ArchitectureDescriptor architecture_from_json(const nlohmann::json& j);

}  // namespace gr::cnn
