#include "gr/adversary/fgsm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gr/error.hpp"
#include "gr/numgrad/graph.hpp"
#include "gr/parallel.hpp"
#include "gr/pcg32.hpp"

namespace gr::adversary {

using numgrad::Tensor;

void AttackConfig::validate() const {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) {
    fail(ErrorCode::kInvalidArgument, "epsilon must lie in [0, 1]");
  }
}

Tensor fgsm(const cnn::ModelState& model, const Tensor& input, std::size_t label,
            const AttackConfig& config) {
  config.validate();
  for (float v : input.values()) {
    if (!(v >= AttackConfig::kClipMin && v <= AttackConfig::kClipMax)) {
      fail(ErrorCode::kInvalidArgument, "fgsm input pixel outside [0, 1]");
    }
  }
  const auto state = numgrad::forward_eval(model.graph, input, label);
  const auto grads = numgrad::backward_grads(model.graph, state);
  if (!grads.input.all_finite()) fail(ErrorCode::kNonFinite, "input gradient is not finite");

  Tensor out = input;
  if (config.epsilon == 0.0) return out;
  const auto eps = static_cast<float>(config.epsilon);
  for (std::size_t k = 0; k < out.size(); ++k) {
    const float g = grads.input[k];
    const float step = g > 0.0f ? eps : (g < 0.0f ? -eps : 0.0f);
    float moved = std::clamp(input[k] + step, AttackConfig::kClipMin, AttackConfig::kClipMax);
    // Float rounding of x + eps can overshoot eps by an ulp; pull back inside.
    while (std::abs(static_cast<double>(moved) - static_cast<double>(input[k])) > config.epsilon) {
      moved = std::nextafter(moved, input[k]);
    }
    out[k] = moved;
  }
  return out;
}

std::size_t adversarial_count(std::size_t n, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    fail(ErrorCode::kInvalidArgument, "attack fraction must lie in (0, 1]");
  }
  return static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
}

namespace {

AdversarialBatch attack_rows(const cnn::ModelState& model, const cnn::Dataset& data,
                             std::vector<std::size_t> rows, const AttackConfig& config,
                             std::size_t threads) {
  config.validate();
  const std::size_t n = data.sample_size();
  std::vector<float> values(rows.size() * n);
  parallel_for(rows.size(), threads, [&](std::size_t k) {
    const std::size_t row = rows[k];
    const Tensor adv = fgsm(model, data.sample(row), data.labels[row], config);
    std::copy(adv.values().begin(), adv.values().end(), values.begin() + static_cast<std::ptrdiff_t>(k * n));
  });
  AdversarialBatch out;
  out.data.class_count = data.class_count;
  out.data.labels.reserve(rows.size());
  for (std::size_t row : rows) out.data.labels.push_back(data.labels[row]);
  numgrad::Shape shape = data.images.shape();
  shape[0] = rows.size();
  out.data.images = Tensor(std::move(shape), std::move(values));
  out.source_index = std::move(rows);
  return out;
}

}  // namespace

AdversarialBatch build_adv_train(const cnn::ModelState& model, const cnn::Dataset& train,
                                 double fraction, const AttackConfig& config, std::uint64_t seed,
                                 std::size_t threads) {
  const std::size_t count = adversarial_count(train.size(), fraction);
  if (count == 0) fail(ErrorCode::kEmptyDataset, "attack fraction selects no training rows");
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Pcg32 rng(seed);
  rng.shuffle(std::span<std::size_t>(order));
  order.resize(count);
  std::sort(order.begin(), order.end());
  return attack_rows(model, train, std::move(order), config, threads);
}

AdversarialBatch attack_all(const cnn::ModelState& model, const cnn::Dataset& data,
                            const AttackConfig& config, std::size_t threads) {
  if (data.size() == 0) fail(ErrorCode::kEmptyDataset, "nothing to attack");
  std::vector<std::size_t> rows(data.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return attack_rows(model, data, std::move(rows), config, threads);
}

std::size_t AugmentedSets::train_star_source(std::size_t id) const {
  if (!train_star_is_adversarial(id) || id - train_size >= adv_train_source.size()) {
    fail(ErrorCode::kInvalidArgument, "Train* id " + std::to_string(id) + " is not adversarial");
  }
  return adv_train_source[id - train_size];
}

AugmentedSets build_augmented_sets(const cnn::ModelState& model, const cnn::Dataset& train,
                                   const cnn::Dataset& test, double fraction,
                                   const AttackConfig& config, std::uint64_t seed,
                                   std::size_t threads) {
  if (train.class_count != test.class_count) {
    fail(ErrorCode::kInvalidArgument, "train and test class counts differ");
  }
  return assemble_augmented_sets(train, test, build_adv_train(model, train, fraction, config, seed, threads),
                                 attack_all(model, test, config, threads));
}

AugmentedSets assemble_augmented_sets(const cnn::Dataset& train, const cnn::Dataset& test,
                                      AdversarialBatch adv_train, AdversarialBatch adv_test) {
  if (train.class_count != test.class_count) {
    fail(ErrorCode::kInvalidArgument, "train and test class counts differ");
  }
  if (adv_train.source_index.size() != adv_train.data.size() ||
      adv_test.source_index.size() != adv_test.data.size()) {
    fail(ErrorCode::kCountMismatch, "adversarial provenance does not cover every adversarial row");
  }
  for (std::size_t s : adv_train.source_index) {
    if (s >= train.size()) fail(ErrorCode::kInvalidArgument, "Adv-Train source " + std::to_string(s) + " out of range");
  }
  for (std::size_t s : adv_test.source_index) {
    if (s >= test.size()) fail(ErrorCode::kInvalidArgument, "Adv-Test source " + std::to_string(s) + " out of range");
  }
  AugmentedSets sets;
  sets.train_size = train.size();
  sets.test_size = test.size();
  sets.train_star = cnn::concat(train, adv_train.data);
  sets.test_star = cnn::concat(test, adv_test.data);
  sets.adv_train = std::move(adv_train.data);
  sets.adv_test = std::move(adv_test.data);
  sets.adv_train_source = std::move(adv_train.source_index);
  sets.adv_test_source = std::move(adv_test.source_index);
  return sets;
}

}  // namespace gr::adversary
