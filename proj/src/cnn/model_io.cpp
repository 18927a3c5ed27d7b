#include "gr/cnn/model_io.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <nlohmann/json.hpp>

#include "gr/error.hpp"

namespace gr::cnn {

namespace {

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t get_u64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

std::string descriptor_text(const ModelState& model) {
  nlohmann::json j = to_json(model.arch);
  j["init_seed"] = model.init_seed;
  nlohmann::json history = nlohmann::json::array();
  for (const auto& h : model.history) history.push_back({h.epoch, h.loss});
  j["history"] = std::move(history);
  return j.dump();
}

}  // namespace

std::vector<std::uint8_t> serialize_model(const ModelState& model) {
  const std::string text = descriptor_text(model);
  std::vector<std::uint8_t> out;
  out.reserve(kModelHeaderSize + text.size() + 4 * model.graph.parameter_count());
  out.insert(out.end(), std::begin(kModelMagic), std::end(kModelMagic));
  out.push_back(kModelFormatVersion);
  put_u64(out, text.size());
  out.insert(out.end(), text.begin(), text.end());
  for (const auto& p : model.graph.parameters()) {
    for (float v : p.value.values()) {
      const auto bits = std::bit_cast<std::uint32_t>(v);
      for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
    }
  }
  return out;
}

ModelState deserialize_model(const std::vector<std::uint8_t>& blob) {
  const std::size_t magic_len = sizeof(kModelMagic);
  if (blob.size() < magic_len) fail(ErrorCode::kTruncated, "model blob shorter than its magic");
  if (!std::equal(std::begin(kModelMagic), std::end(kModelMagic), blob.begin(),
                  [](char a, std::uint8_t b) { return static_cast<std::uint8_t>(a) == b; })) {
    fail(ErrorCode::kBadMagic, "not a GRCNN1 model file");
  }
  if (blob.size() < kModelHeaderSize) fail(ErrorCode::kTruncated, "model header incomplete");
  if (blob[magic_len] != kModelFormatVersion) {
    fail(ErrorCode::kVersionMismatch, "model format version " + std::to_string(blob[magic_len]) +
                                          ", expected " + std::to_string(kModelFormatVersion));
  }
  const std::uint64_t length = get_u64(blob.data() + magic_len + 1);
  if (length > blob.size() - kModelHeaderSize) fail(ErrorCode::kTruncated, "descriptor cut short");
  const auto* text_begin = reinterpret_cast<const char*>(blob.data() + kModelHeaderSize);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text_begin, text_begin + length);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kInvalidArchitecture, std::string("descriptor is not valid JSON: ") + e.what());
  }

  ModelState model;
  model.arch = architecture_from_json(j);
  model.arch.validate();
  model.graph = model.arch.to_graph();
  model.init_seed = j.value("init_seed", std::uint64_t{0});
  if (j.contains("history")) {
    for (const auto& h : j["history"]) {
      model.history.push_back({h.at(0).get<std::size_t>(), h.at(1).get<double>()});
    }
  }

  std::size_t pos = kModelHeaderSize + length;
  const std::size_t needed = 4 * model.graph.parameter_count();
  if (blob.size() - pos < needed) fail(ErrorCode::kTruncated, "parameter block cut short");
  if (blob.size() - pos > needed) fail(ErrorCode::kTruncated, "trailing bytes after parameters");
  for (auto& p : model.graph.parameters()) {
    for (float& v : p.value.values()) {
      std::uint32_t bits = 0;
      for (int i = 0; i < 4; ++i) bits |= static_cast<std::uint32_t>(blob[pos + i]) << (8 * i);
      v = std::bit_cast<float>(bits);
      pos += 4;
    }
  }
  return model;
}

void save_model(const ModelState& model, const std::filesystem::path& path) {
  const auto blob = serialize_model(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(blob.data()), static_cast<std::streamsize>(blob.size()));
  if (!out) fail(ErrorCode::kIo, "write to '" + path.string() + "' failed");
}

ModelState load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open '" + path.string() + "'");
  std::vector<std::uint8_t> blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_model(blob);
}

}  // namespace gr::cnn
