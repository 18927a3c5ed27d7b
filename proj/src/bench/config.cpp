#include "gr/bench/config.hpp"

#include <fstream>
#include <functional>
#include <sstream>

#include "gr/bench/text.hpp"
#include "gr/error.hpp"

namespace gr::bench {

namespace {

struct Key {
  std::string name;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

std::size_t parse_size(const std::string& v) { return static_cast<std::size_t>(parse_u64(v)); }

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? "," : "") + parts[i];
  return out;
}

std::vector<std::string> list_items(const std::string& v) {
  std::vector<std::string> out;
  for (const auto& item : split(v, ',')) {
    const auto t = trim(item);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

void add_train_keys(std::vector<Key>& keys, const std::string& prefix, cnn::TrainOptions ExperimentConfig::*field) {
  keys.push_back({prefix + ".epochs", [=](auto& c, auto& v) { (c.*field).epochs = parse_size(v); },
                  [=](auto& c) { return std::to_string((c.*field).epochs); }});
  keys.push_back({prefix + ".batch_size", [=](auto& c, auto& v) { (c.*field).batch_size = parse_size(v); },
                  [=](auto& c) { return std::to_string((c.*field).batch_size); }});
  keys.push_back({prefix + ".learning_rate", [=](auto& c, auto& v) { (c.*field).learning_rate = parse_real(v); },
                  [=](auto& c) { return format_real((c.*field).learning_rate); }});
  keys.push_back({prefix + ".momentum", [=](auto& c, auto& v) { (c.*field).momentum = parse_real(v); },
                  [=](auto& c) { return format_real((c.*field).momentum); }});
}

const std::vector<Key>& keys() {
  static const std::vector<Key> table = [] {
    std::vector<Key> k;
    k.push_back({"dataset.name", [](auto& c, auto& v) { c.dataset_name = v; },
                 [](auto& c) { return c.dataset_name; }});
    k.push_back({"dataset.source",
                 [](auto& c, auto& v) {
                   if (v == "synthetic") c.source = DatasetSource::kSynthetic;
                   else if (v == "idx") c.source = DatasetSource::kIdx;
                   else fail(ErrorCode::kConfig, "dataset.source must be 'synthetic' or 'idx'");
                 },
                 [](auto& c) { return std::string(c.source == DatasetSource::kIdx ? "idx" : "synthetic"); }});
    k.push_back({"synthetic.classes", [](auto& c, auto& v) { c.synthetic_train.classes = parse_size(v); },
                 [](auto& c) { return std::to_string(c.synthetic_train.classes); }});
    k.push_back({"synthetic.image_size", [](auto& c, auto& v) { c.synthetic_train.image_size = parse_size(v); },
                 [](auto& c) { return std::to_string(c.synthetic_train.image_size); }});
    k.push_back({"synthetic.noise", [](auto& c, auto& v) { c.synthetic_train.noise = parse_real(v); },
                 [](auto& c) { return format_real(c.synthetic_train.noise); }});
    k.push_back({"synthetic.train_per_class", [](auto& c, auto& v) { c.synthetic_train.per_class = parse_size(v); },
                 [](auto& c) { return std::to_string(c.synthetic_train.per_class); }});
    k.push_back({"synthetic.test_per_class", [](auto& c, auto& v) { c.synthetic_test_per_class = parse_size(v); },
                 [](auto& c) { return std::to_string(c.synthetic_test_per_class); }});
    k.push_back({"synthetic.train_seed", [](auto& c, auto& v) { c.synthetic_train.seed = parse_u64(v); },
                 [](auto& c) { return std::to_string(c.synthetic_train.seed); }});
    k.push_back({"synthetic.test_seed", [](auto& c, auto& v) { c.synthetic_test_seed = parse_u64(v); },
                 [](auto& c) { return std::to_string(c.synthetic_test_seed); }});
    k.push_back({"idx.train_images", [](auto& c, auto& v) { c.train_images = v; },
                 [](auto& c) { return c.train_images.string(); }});
    k.push_back({"idx.train_labels", [](auto& c, auto& v) { c.train_labels = v; },
                 [](auto& c) { return c.train_labels.string(); }});
    k.push_back({"idx.test_images", [](auto& c, auto& v) { c.test_images = v; },
                 [](auto& c) { return c.test_images.string(); }});
    k.push_back({"idx.test_labels", [](auto& c, auto& v) { c.test_labels = v; },
                 [](auto& c) { return c.test_labels.string(); }});
    k.push_back({"architecture", [](auto& c, auto& v) { c.architecture = v; },
                 [](auto& c) { return c.architecture.string(); }});
    add_train_keys(k, "train", &ExperimentConfig::train);
    add_train_keys(k, "retrain", &ExperimentConfig::retrain);
    k.push_back({"attack.epsilon", [](auto& c, auto& v) { c.attack.epsilon = parse_real(v); },
                 [](auto& c) { return format_real(c.attack.epsilon); }});
    k.push_back({"attack.fraction", [](auto& c, auto& v) { c.adv_fraction = parse_real(v); },
                 [](auto& c) { return format_real(c.adv_fraction); }});
    k.push_back({"nc.threshold", [](auto& c, auto& v) { c.scoring.nc.threshold = parse_real(v); },
                 [](auto& c) { return format_real(c.scoring.nc.threshold); }});
    k.push_back({"lsa.layer", [](auto& c, auto& v) { c.scoring.lsa_layer = v; },
                 [](auto& c) { return c.scoring.lsa_layer; }});
    k.push_back({"lsa.variance_threshold",
                 [](auto& c, auto& v) { c.scoring.lsa_variance_threshold = parse_real(v); },
                 [](auto& c) { return format_real(c.scoring.lsa_variance_threshold); }});
    k.push_back({"dsa.layers", [](auto& c, auto& v) { c.scoring.dsa_layers = list_items(v); },
                 [](auto& c) { return join(c.scoring.dsa_layers); }});
    k.push_back({"metrics",
                 [](auto& c, auto& v) {
                   c.metrics.clear();
                   for (const auto& m : list_items(v)) c.metrics.push_back(guidance::parse_metric(m));
                 },
                 [](auto& c) {
                   std::vector<std::string> names;
                   for (auto m : c.metrics) names.emplace_back(guidance::to_string(m));
                   return join(names);
                 }});
    k.push_back({"configs",
                 [](auto& c, auto& v) {
                   c.configs.clear();
                   for (const auto& m : list_items(v)) c.configs.push_back(retrainer::parse_config_kind(m));
                 },
                 [](auto& c) {
                   std::vector<std::string> names;
                   for (auto m : c.configs) names.emplace_back(retrainer::to_string(m));
                   return join(names);
                 }});
    k.push_back({"seed.init", [](auto& c, auto& v) { c.seed_init = parse_u64(v); },
                 [](auto& c) { return std::to_string(c.seed_init); }});
    k.push_back({"seed.shuffle", [](auto& c, auto& v) { c.seed_shuffle = parse_u64(v); },
                 [](auto& c) { return std::to_string(c.seed_shuffle); }});
    k.push_back({"seed.attack", [](auto& c, auto& v) { c.seed_attack = parse_u64(v); },
                 [](auto& c) { return std::to_string(c.seed_attack); }});
    k.push_back({"seed.random", [](auto& c, auto& v) { c.seed_random = parse_u64(v); },
                 [](auto& c) { return std::to_string(c.seed_random); }});
    k.push_back({"output", [](auto& c, auto& v) { c.output = v; },
                 [](auto& c) { return c.output.string(); }});
    return k;
  }();
  return table;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (metrics.empty()) fail(ErrorCode::kConfig, "at least one metric is required");
  if (configs.empty()) fail(ErrorCode::kConfig, "at least one retraining configuration is required");
  if (dataset_name.empty() || dataset_name.find_first_of(",/\\ ") != std::string::npos) {
    fail(ErrorCode::kConfig, "dataset.name must be non-empty without commas, slashes or spaces");
  }
  if (source == DatasetSource::kIdx &&
      (train_images.empty() || train_labels.empty() || test_images.empty() || test_labels.empty())) {
    fail(ErrorCode::kConfig, "idx source needs idx.train_images, idx.train_labels, idx.test_images, idx.test_labels");
  }
  if (source == DatasetSource::kSynthetic && (synthetic_train.per_class == 0 || synthetic_test_per_class == 0)) {
    fail(ErrorCode::kConfig, "synthetic per-class counts must be positive");
  }
  if (synthetic_train.noise < 0.0) fail(ErrorCode::kConfig, "synthetic.noise must be non-negative");
  if (!(adv_fraction > 0.0 && adv_fraction <= 1.0)) fail(ErrorCode::kConfig, "attack.fraction must be in (0, 1]");
  if (train.batch_size == 0 || retrain.batch_size == 0) fail(ErrorCode::kConfig, "batch size must be positive");
  attack.validate();
}

std::vector<std::pair<std::string, std::string>> ExperimentConfig::echo() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& k : keys()) out.emplace_back(k.name, k.get(*this));
  return out;
}

void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  for (const auto& k : keys()) {
    if (k.name == key) {
      k.set(cfg, value);
      return;
    }
  }
  fail(ErrorCode::kConfig, "unknown key '" + key + "'");
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto body = std::string_view(line);
    if (const auto hash = body.find('#'); hash != std::string_view::npos) body = body.substr(0, hash);
    body = trim(body);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) {
      fail(ErrorCode::kConfig, "line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key(trim(body.substr(0, eq)));
    const std::string value(trim(body.substr(eq + 1)));
    try {
      set_config_value(cfg, key, value);
    } catch (const Error& e) {
      fail(ErrorCode::kConfig, "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open config '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace gr::bench
