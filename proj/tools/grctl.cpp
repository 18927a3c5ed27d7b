// grctl: drives the adversarial-retraining pipeline from a config file.
#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "gr/bench/config.hpp"
#include "gr/bench/pipeline.hpp"
#include "gr/error.hpp"
#include "gr/guidance/scores.hpp"
#include "gr/guidance/scoring.hpp"

namespace {

struct CommonFlags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed_init, seed_shuffle, seed_attack, seed_random;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "experiment config (key = value)")->check(CLI::ExistingFile);
  cmd->add_option("--out", f.out, "output directory (overrides 'output')");
  cmd->add_option("--seed-init", f.seed_init, "override seed.init");
  cmd->add_option("--seed-shuffle", f.seed_shuffle, "override seed.shuffle");
  cmd->add_option("--seed-attack", f.seed_attack, "override seed.attack");
  cmd->add_option("--seed-random", f.seed_random, "override seed.random");
}

gr::bench::ExperimentConfig resolve(const CommonFlags& f) {
  auto cfg = f.config.empty() ? gr::bench::ExperimentConfig{} : gr::bench::load_config(f.config);
  if (!f.out.empty()) cfg.output = f.out;
  if (f.seed_init) cfg.seed_init = *f.seed_init;
  if (f.seed_shuffle) cfg.seed_shuffle = *f.seed_shuffle;
  if (f.seed_attack) cfg.seed_attack = *f.seed_attack;
  if (f.seed_random) cfg.seed_random = *f.seed_random;
  cfg.validate();
  return cfg;
}

void print_summary(const gr::bench::ReportBundle& bundle) {
  for (const auto& rec : bundle.records) {
    std::cout << gr::retrainer::to_string(rec.kind) << " " << gr::guidance::to_string(rec.metric)
              << ": original " << rec.original_accuracy << ", best " << rec.best_accuracy << " at "
              << rec.best_size << "/" << rec.total << "\n";
  }
  std::cout << "summary: " << bundle.summary.string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Metric-guided adversarial retraining of a small CNN"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::size_t seeds = 5;
  auto* train = app.add_subcommand("train", "generate or load data and train the original model");
  auto* attack = app.add_subcommand("attack", "build Adv-Train and Adv-Test with FGSM");
  auto* score = app.add_subcommand("score", "score Train* with each metric and time it");
  auto* retrain = app.add_subcommand("retrain", "run the 20-point sweeps for each configuration and metric");
  auto* report = app.add_subcommand("report", "write summary, comparison and plot CSVs from the sweep results");
  auto* run = app.add_subcommand("run", "all stages in order");
  auto* trend = app.add_subcommand("trend", "compare SA metrics with Random under C2 over several seeds");
  trend->add_option("--seeds", seeds, "number of seed sets")->check(CLI::PositiveNumber);
  for (auto* cmd : {train, attack, score, retrain, report, run, trend}) add_common(cmd, flags);

  CLI11_PARSE(app, argc, argv);

  try {
    const auto cfg = resolve(flags);
    const std::size_t threads = gr::bench::threads_from_env();
    if (train->parsed()) {
      gr::bench::command_train(cfg);
    } else if (attack->parsed()) {
      gr::bench::command_attack(cfg, threads);
    } else if (score->parsed()) {
      gr::bench::command_score(cfg, threads);
    } else if (retrain->parsed()) {
      gr::bench::command_retrain(cfg, threads);
    } else if (report->parsed()) {
      print_summary(gr::bench::command_report(cfg));
    } else if (run->parsed()) {
      print_summary(gr::bench::run_pipeline(cfg, threads));
    } else if (trend->parsed()) {
      const auto r = gr::bench::run_trend(cfg, seeds, threads);
      std::cout << "best SA " << gr::guidance::to_string(r.best_sa) << " mean size " << r.best_sa_mean
                << ", Random " << r.random_mean << ": " << (r.holds ? "holds" : "does not hold") << "\n";
    }
  } catch (const gr::Error& e) {
    std::cerr << "grctl: " << gr::to_string(e.code()) << ": " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "grctl: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
