#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "gr/adversary/fgsm.hpp"
#include "gr/bench/datasets.hpp"
#include "gr/cnn/model.hpp"
#include "gr/guidance/scoring.hpp"
#include "gr/retrainer/retrainer.hpp"

namespace gr::bench {

enum class DatasetSource { kSynthetic, kIdx };

struct ExperimentConfig {
  std::string dataset_name = "synthetic";
  DatasetSource source = DatasetSource::kSynthetic;
  SyntheticSpec synthetic_train{4, 500, 16, 1.0, 1};
  std::size_t synthetic_test_per_class = 125;
  std::uint64_t synthetic_test_seed = 2;
  std::filesystem::path train_images, train_labels, test_images, test_labels;

  std::filesystem::path architecture;  // empty: desk default
  cnn::TrainOptions train{20, 32, 0.01, 0.9, 0};
  cnn::TrainOptions retrain{5, 32, 0.01, 0.9, 0};
  adversary::AttackConfig attack;
  double adv_fraction = adversary::kDefaultAdvFraction;
  guidance::ScoringConfig scoring;

  std::vector<guidance::Metric> metrics{guidance::Metric::kNC, guidance::Metric::kLSA,
                                        guidance::Metric::kDSA, guidance::Metric::kRandom};
  std::vector<retrainer::RetrainConfigKind> configs{retrainer::RetrainConfigKind::kC1,
                                                    retrainer::RetrainConfigKind::kC2,
                                                    retrainer::RetrainConfigKind::kC3};

  std::uint64_t seed_init = 1;     // M's initialization and the C1 fresh init
  std::uint64_t seed_shuffle = 2;  // minibatch order, original training and retraining
  std::uint64_t seed_attack = 3;   // which Train rows are attacked
  std::uint64_t seed_random = 4;   // the Random metric

  std::filesystem::path output = "gr-out";

  void validate() const;
  /// Every key with its current value, in a fixed order.
  std::vector<std::pair<std::string, std::string>> echo() const;
};

/// Parses the flat `key = value` format. '#' starts a comment; blank lines
/// are skipped; unknown keys and malformed values are kConfig errors that
/// name the line.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Applies one `key = value` assignment.
void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value);

}  // namespace gr::bench
