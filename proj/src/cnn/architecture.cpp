#include "gr/cnn/architecture.hpp"

#include <set>

#include <nlohmann/json.hpp>

#include "gr/error.hpp"

namespace gr::cnn {

using numgrad::Padding;

LayerSpec LayerSpec::conv(std::string name, std::size_t filters, std::size_t kernel,
                          std::size_t stride, Padding padding) {
  LayerSpec s;
  s.name = std::move(name);
  s.kind = LayerKind::kConv;
  s.filters = filters;
  s.kernel = kernel;
  s.stride = stride;
  s.padding = padding;
  return s;
}

LayerSpec LayerSpec::maxpool(std::string name, std::size_t size) {
  LayerSpec s;
  s.name = std::move(name);
  s.kind = LayerKind::kMaxPool;
  s.pool = size;
  return s;
}

LayerSpec LayerSpec::dense(std::string name, std::size_t units) {
  LayerSpec s;
  s.name = std::move(name);
  s.kind = LayerKind::kDense;
  s.units = units;
  return s;
}

LayerSpec LayerSpec::relu(std::string name) {
  LayerSpec s;
  s.name = std::move(name);
  s.kind = LayerKind::kRelu;
  return s;
}

ArchitectureDescriptor ArchitectureDescriptor::desk_default(std::size_t height, std::size_t width,
                                                            std::size_t channels,
                                                            std::size_t classes) {
  ArchitectureDescriptor a;
  a.height = height;
  a.width = width;
  a.channels = channels;
  a.classes = classes;
  a.layers = {
      LayerSpec::conv("conv1", 8, 3),    LayerSpec::relu("relu1"),  LayerSpec::maxpool("pool1", 2),
      LayerSpec::conv("conv2", 16, 3),   LayerSpec::relu("relu2"),  LayerSpec::maxpool("pool2", 2),
      LayerSpec::dense("dense1", 32),    LayerSpec::relu("relu3"),  LayerSpec::dense("logits", classes),
  };
  return a;
}

void ArchitectureDescriptor::validate() const {
  if (height == 0 || width == 0 || channels == 0) {
    fail(ErrorCode::kInvalidArchitecture, "input shape must be positive");
  }
  if (classes < 2) fail(ErrorCode::kInvalidArchitecture, "class count must be at least 2");
  if (layers.empty()) fail(ErrorCode::kInvalidArchitecture, "no layers");
  std::set<std::string> names;
  for (const auto& l : layers) {
    if (!names.insert(l.name).second) {
      fail(ErrorCode::kInvalidArchitecture, "duplicate layer name '" + l.name + "'");
    }
  }
  const LayerSpec& head = layers.back();
  if (head.kind != LayerKind::kDense || head.units != classes) {
    fail(ErrorCode::kInvalidArchitecture,
         "last layer must be dense(" + std::to_string(classes) + ") feeding the softmax head");
  }
  (void)to_graph();  // resolves and checks every layer's shapes
}

numgrad::Graph ArchitectureDescriptor::to_graph() const {
  numgrad::Graph g(input_shape());
  for (const auto& l : layers) {
    switch (l.kind) {
      case LayerKind::kConv: g.conv2d(l.name, l.filters, l.kernel, l.stride, l.padding); break;
      case LayerKind::kMaxPool: g.maxpool2d(l.name, l.pool); break;
      case LayerKind::kDense: g.dense(l.name, l.units); break;
      case LayerKind::kRelu: g.relu(l.name); break;
    }
  }
  return g;
}

std::vector<std::string> ArchitectureDescriptor::neuron_layers() const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i + 1 < layers.size(); ++i) {
    if (layers[i].kind == LayerKind::kConv || layers[i].kind == LayerKind::kDense) {
      out.push_back(layers[i].name);
    }
  }
  return out;
}

namespace {

const char* kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::kConv: return "conv";
    case LayerKind::kMaxPool: return "maxpool";
    case LayerKind::kDense: return "dense";
    case LayerKind::kRelu: return "relu";
  }
  return "?";
}

LayerKind kind_from(const std::string& s) {
  if (s == "conv") return LayerKind::kConv;
  if (s == "maxpool") return LayerKind::kMaxPool;
  if (s == "dense") return LayerKind::kDense;
  if (s == "relu") return LayerKind::kRelu;
  fail(ErrorCode::kInvalidArchitecture, "unknown layer kind '" + s + "'");
}

}  // namespace

nlohmann::json to_json(const ArchitectureDescriptor& arch) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : arch.layers) {
    nlohmann::json j{{"name", l.name}, {"kind", kind_name(l.kind)}};
    switch (l.kind) {
      case LayerKind::kConv:
        j["filters"] = l.filters;
        j["kernel"] = l.kernel;
        j["stride"] = l.stride;
        j["padding"] = l.padding == Padding::kSame ? "same" : "valid";
        break;
      case LayerKind::kMaxPool: j["size"] = l.pool; break;
      case LayerKind::kDense: j["units"] = l.units; break;
      case LayerKind::kRelu: break;
    }
    layers.push_back(std::move(j));
  }
  return {{"input", {arch.height, arch.width, arch.channels}},
          {"classes", arch.classes},
          {"layers", std::move(layers)}};
}

ArchitectureDescriptor architecture_from_json(const nlohmann::json& j) {
  try {
    ArchitectureDescriptor a;
    const auto& input = j.at("input");
    if (!input.is_array() || input.size() != 3) {
      fail(ErrorCode::kInvalidArchitecture, "'input' must be [H, W, C]");
    }
    a.height = input[0].get<std::size_t>();
    a.width = input[1].get<std::size_t>();
    a.channels = input[2].get<std::size_t>();
    a.classes = j.at("classes").get<std::size_t>();
    for (const auto& lj : j.at("layers")) {
      LayerSpec l;
      l.name = lj.at("name").get<std::string>();
      l.kind = kind_from(lj.at("kind").get<std::string>());
      switch (l.kind) {
        case LayerKind::kConv: {
          l.filters = lj.at("filters").get<std::size_t>();
          l.kernel = lj.at("kernel").get<std::size_t>();
          l.stride = lj.value("stride", std::size_t{1});
          const std::string pad = lj.value("padding", std::string("same"));
          if (pad != "same" && pad != "valid") {
            fail(ErrorCode::kInvalidArchitecture, "padding must be 'same' or 'valid'");
          }
          l.padding = pad == "same" ? Padding::kSame : Padding::kValid;
          break;
        }
        case LayerKind::kMaxPool: l.pool = lj.at("size").get<std::size_t>(); break;
        case LayerKind::kDense: l.units = lj.at("units").get<std::size_t>(); break;
        case LayerKind::kRelu: break;
      }
      a.layers.push_back(std::move(l));
    }
    return a;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kInvalidArchitecture, std::string("malformed descriptor: ") + e.what());
  }
}

}  // namespace gr::cnn
