#pragma once

#include <cstdint>
#include <vector>

#include "gr/cnn/dataset.hpp"
#include "gr/cnn/model.hpp"
#include "gr/numgrad/tensor.hpp"

namespace gr::adversary {

struct AttackConfig {
  double epsilon = 0.1;  // sup-norm budget in [0,1] pixel units
  static constexpr float kClipMin = 0.0f;
  static constexpr float kClipMax = 1.0f;

  void validate() const;
};

/// Default share of Train that is attacked: 5000 / 31366, the GTSRB split.
inline constexpr double kDefaultAdvFraction = 5000.0 / 31366.0;

/// One-shot untargeted FGSM against the true label:
/// x* = clip(x + eps * sign(grad_x J(x, label)), 0, 1).
numgrad::Tensor fgsm(const cnn::ModelState& model, const numgrad::Tensor& input, std::size_t label,
                     const AttackConfig& config);

struct AdversarialBatch {
  cnn::Dataset data;
  std::vector<std::size_t> source_index;  // row in the attacked dataset, per adversarial row
};

/// Number of rows build_adv_train attacks: round(fraction * n).
std::size_t adversarial_count(std::size_t n, double fraction);

/// Attacks round(fraction * |train|) rows chosen uniformly without
/// replacement by PCG32(seed); rows come out in ascending source order.
AdversarialBatch build_adv_train(const cnn::ModelState& model, const cnn::Dataset& train,
                                 double fraction, const AttackConfig& config, std::uint64_t seed,
                                 std::size_t threads = 1);

/// Attacks every row of `data`.
AdversarialBatch attack_all(const cnn::ModelState& model, const cnn::Dataset& data,
                            const AttackConfig& config, std::size_t threads = 1);

/// Train* = Train ++ Adv-Train and Test* = Test ++ Adv-Test. In the starred
/// sets ids below the original size are clean rows; id (n + k) is adversarial
/// row k, derived from source row source_index[k].
struct AugmentedSets {
  cnn::Dataset adv_train;
  cnn::Dataset train_star;
  cnn::Dataset adv_test;
  cnn::Dataset test_star;
  std::vector<std::size_t> adv_train_source;
  std::vector<std::size_t> adv_test_source;
  std::size_t train_size = 0;
  std::size_t test_size = 0;

  bool train_star_is_adversarial(std::size_t id) const { return id >= train_size; }
  bool test_star_is_adversarial(std::size_t id) const { return id >= test_size; }
  /// Source row of an adversarial Train* id.
  std::size_t train_star_source(std::size_t id) const;
};

AugmentedSets build_augmented_sets(const cnn::ModelState& model, const cnn::Dataset& train,
                                   const cnn::Dataset& test, double fraction,
                                   const AttackConfig& config, std::uint64_t seed,
                                   std::size_t threads = 1);

/// Same sets from already attacked batches.
AugmentedSets assemble_augmented_sets(const cnn::Dataset& train, const cnn::Dataset& test,
                                      AdversarialBatch adv_train, AdversarialBatch adv_test);

}  // namespace gr::adversary
