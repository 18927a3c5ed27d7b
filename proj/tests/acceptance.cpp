// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>

#include "gr/bench/pipeline.hpp"
#include "gr/bench/text.hpp"
#include "gr/guidance/coverage.hpp"
#include "gr/guidance/surprise.hpp"
#include "support/oracles.hpp"

using namespace gr;
using guidance::Metric;
using retrainer::RetrainConfigKind;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int n, const std::string& title, const std::function<Outcome()>& body) {
  Outcome o;
  const auto t0 = Clock::now();
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  if (!o.pass) ++failures;
  std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << n << ": " << title << " (" << o.detail << "; "
            << bench::format_fixed(since(t0), 1) << " s)" << std::endl;
}

std::string pct(double v) { return bench::format_fixed(100.0 * v, 1) + "%"; }

// Shared state for the criteria that use the default synthetic dataset.
struct DeskRun {
  bench::ExperimentConfig cfg;
  bench::Datasets data;
  cnn::ModelState model;
  adversary::AugmentedSets sets;
  double train_attack_seconds = 0.0;
};

const DeskRun& desk_run() {
  static const DeskRun run = [] {
    DeskRun r;
    r.cfg.output = "acceptance-out/desk";
    const auto t0 = Clock::now();
    r.data = bench::load_datasets(r.cfg);
    r.model = bench::train_original(r.cfg, r.data.train);
    r.sets = bench::attack_stage(r.cfg, r.model, r.data, bench::threads_from_env());
    r.train_attack_seconds = since(t0);
    return r;
  }();
  return run;
}

// Small configuration used for end-to-end runs.
bench::ExperimentConfig small_config(const std::string& out) {
  auto cfg = bench::parse_config(
      "synthetic.train_per_class = 40\n"
      "synthetic.test_per_class = 10\n"
      "train.epochs = 3\n"
      "retrain.epochs = 1\n"
      "attack.fraction = 0.25\n");
  cfg.output = out;
  return cfg;
}

std::vector<double> row_of(const guidance::TraceMatrix& t, std::size_t r) {
  const auto s = t.row(r);
  return {s.begin(), s.end()};
}

}  // namespace

int main() {
  fs::remove_all("acceptance-out");
  fs::create_directories("acceptance-out");
  const std::size_t threads = bench::threads_from_env();

  report(1, "autodiff matches central finite differences on random graphs", [] {
    const auto t0 = Clock::now();
    double worst = 0.0;
    std::size_t checked = 0, graphs = 0;
    bool each_checked = true;
    for (std::uint64_t seed = 1; seed <= 24; ++seed, ++graphs) {
      auto c = oracle::random_case(seed);
      const auto s = numgrad::forward_eval(c.graph, c.input, c.label);
      const auto rep = oracle::finite_difference_check(c.graph, c.input, c.label, numgrad::backward_grads(c.graph, s));
      worst = std::max(worst, rep.max_rel_error);
      checked += rep.checked;
      each_checked = each_checked && rep.checked > 0;
    }
    const double secs = since(t0);
    std::ostringstream d;
    d << graphs << " graphs, " << checked << " partials, max rel error " << worst;
    return Outcome{each_checked && worst < 1e-3 && secs < 30.0, d.str()};
  });

  report(2, "FGSM identity at zero budget, sup-norm bound and range on 1000 inputs", [] {
    const auto t0 = Clock::now();
    const auto data = bench::generate_synthetic({4, 250, 16, 1.0, 11});
    const auto model = cnn::build_model(cnn::ArchitectureDescriptor::desk_default(16, 16, 1, 4), 5);
    std::size_t bad = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
      const auto x = data.sample(i);
      if (!(adversary::fgsm(model, x, data.labels[i], {0.0}) == x)) ++bad;
      for (double eps : {0.05, 0.1}) {
        const auto adv = adversary::fgsm(model, x, data.labels[i], {eps});
        for (std::size_t k = 0; k < x.size(); ++k) {
          const double diff = std::abs(static_cast<double>(adv[k]) - static_cast<double>(x[k]));
          if (diff > eps || adv[k] < 0.0f || adv[k] > 1.0f) ++bad;
        }
      }
    }
    const double secs = since(t0);
    return Outcome{bad == 0 && secs < 10.0, std::to_string(data.size()) + " inputs, " + std::to_string(bad) +
                                                 " violations"};
  });

  report(3, "attack drops a >=90% desk model by >=30 points on Adv-Test at eps 0.1", [] {
    const auto& r = desk_run();
    const double clean = cnn::accuracy(r.model, r.data.test, bench::threads_from_env());
    const double adv = cnn::accuracy(r.model, r.sets.adv_test, bench::threads_from_env());
    const bool ok = r.cfg.attack.epsilon == 0.1 && clean >= 0.9 && clean - adv >= 0.3 &&
                    r.train_attack_seconds < 300.0;
    return Outcome{ok, "clean " + pct(clean) + ", adversarial " + pct(adv) + ", train+attack " +
                           bench::format_fixed(r.train_attack_seconds, 1) + " s"};
  });

  report(4, "NC, LSA and DSA agree with direct oracles on real traces", [] {
    const auto t0 = Clock::now();
    const auto data = bench::generate_synthetic({4, 25, 16, 1.0, 21});
    const auto model = cnn::train(cnn::build_model(cnn::ArchitectureDescriptor::desk_default(16, 16, 1, 4), 3),
                                  data, {2, 16, 0.01, 0.9, 4});
    // 80 reference traces and 20 queries.
    std::vector<std::size_t> ref_ids(80), query_ids(20);
    std::iota(ref_ids.begin(), ref_ids.end(), std::size_t{0});
    std::iota(query_ids.begin(), query_ids.end(), std::size_t{80});
    const auto refs = data.subset(ref_ids);
    const auto queries = data.subset(query_ids);
    std::size_t bad_nc = 0, bad_dsa = 0;
    double worst_lsa = 0.0;

    const auto layers = model.arch.neuron_layers();
    const auto layout = cnn::trace_layout(model, layers);
    for (std::size_t i = 0; i < queries.size(); ++i) {
      const auto t = cnn::activation_trace(model, queries.sample(i), layers).values;
      std::size_t active = 0;
      for (const auto& seg : layout.segments) {
        const auto first = t.begin() + static_cast<std::ptrdiff_t>(seg.offset);
        const auto last = first + static_cast<std::ptrdiff_t>(seg.length);
        const double lo = *std::min_element(first, last), hi = *std::max_element(first, last);
        if (hi == lo) continue;
        for (auto it = first; it != last; ++it) active += (*it - lo) / (hi - lo) > 0.5;
      }
      if (guidance::nc_score(model, queries.sample(i), {0.5}) !=
          static_cast<double>(active) / static_cast<double>(layout.total)) {
        ++bad_nc;
      }
    }

    const auto ref_traces = guidance::collect_traces(model, refs, layout);
    const auto query_traces = guidance::collect_traces(model, queries, layout);
    std::vector<std::vector<double>> ref_rows;
    for (std::size_t r = 0; r < ref_traces.rows(); ++r) ref_rows.push_back(row_of(ref_traces, r));
    const auto index = guidance::build_dsa_index(ref_traces, layers);
    for (std::size_t q = 0; q < query_traces.rows(); ++q) {
      const double want = oracle::dsa_exhaustive(ref_rows, ref_traces.labels, row_of(query_traces, q),
                                                 query_traces.predicted[q]);
      if (guidance::dsa_from_trace(index, query_traces.row(q), query_traces.predicted[q]).value != want) ++bad_dsa;
    }
    const auto members = guidance::dsa_score_members(index);
    for (std::size_t r = 0; r < ref_rows.size(); ++r) {
      if (members[r].value !=
          oracle::dsa_exhaustive(ref_rows, ref_traces.labels, ref_rows[r], ref_traces.predicted[r], r)) {
        ++bad_dsa;
      }
    }

    const std::string lsa_layer = guidance::default_lsa_layer(model.arch);
    const std::vector<std::string> lsa_layers{lsa_layer};
    const auto lsa_layout = cnn::trace_layout(model, lsa_layers);
    const auto lsa_refs = guidance::collect_traces(model, refs, lsa_layout);
    const auto lsa_queries = guidance::collect_traces(model, queries, lsa_layout);
    const auto est = guidance::fit_lsa_from_traces(lsa_refs, guidance::kDefaultVarianceThreshold);
    std::vector<std::size_t> kept;
    for (std::size_t j = 0; j < lsa_refs.dim; ++j) {
      std::vector<double> col;
      for (std::size_t r = 0; r < lsa_refs.rows(); ++r) col.push_back(lsa_refs.row(r)[j]);
      const double sd = oracle::sample_std(col);
      if (sd * sd >= guidance::kDefaultVarianceThreshold) kept.push_back(j);
    }
    auto project = [&](std::span<const double> row) {
      std::vector<double> out;
      for (std::size_t j : kept) out.push_back(row[j]);
      return out;
    };
    for (std::size_t q = 0; q < lsa_queries.rows(); ++q) {
      const std::size_t cls = lsa_queries.predicted[q];
      std::vector<std::vector<double>> members_of;
      for (std::size_t r = 0; r < lsa_refs.rows(); ++r) {
        if (lsa_refs.labels[r] == cls) members_of.push_back(project(lsa_refs.row(r)));
      }
      std::vector<double> h(kept.size());
      for (std::size_t j = 0; j < kept.size(); ++j) {
        std::vector<double> col;
        for (const auto& m : members_of) col.push_back(m[j]);
        h[j] = oracle::sample_std(col) *
               std::pow(static_cast<double>(members_of.size()), -1.0 / (static_cast<double>(kept.size()) + 4.0));
      }
      const double want = oracle::lsa_direct(members_of, project(lsa_queries.row(q)), h);
      const double got = guidance::lsa_from_trace(est, lsa_queries.row(q), cls);
      worst_lsa = std::max(worst_lsa, std::abs(got - want) / std::max(std::abs(want), 1e-300));
    }
    const double secs = since(t0);
    std::ostringstream d;
    d << "100 traces; NC mismatches " << bad_nc << ", DSA mismatches " << bad_dsa << ", LSA max rel error "
      << worst_lsa << " over " << kept.size() << " neurons";
    return Outcome{bad_nc == 0 && bad_dsa == 0 && worst_lsa <= 1e-9 && secs < 30.0, d.str()};
  });

  report(5, "resource utilization 14400/36366 renders as 0.3960", [] {
    retrainer::ExperimentRecord rec;
    rec.best_size = 14400;
    rec.total = 36366;
    std::vector<bench::PointRow> rows;
    for (std::size_t i = 0; i < 20; ++i) {
      bench::PointRow p;
      p.dataset = "formula";
      p.config = RetrainConfigKind::kC2;
      p.metric = Metric::kDSA;
      p.point = i;
      p.input_size = i == 19 ? 36366 : 1800 * (i + 1);
      p.total_inputs = 36366;
      p.accuracy_test_star = p.input_size >= 14400 ? 0.953 : 0.6;
      p.original_accuracy = 0.589;
      rows.push_back(p);
    }
    const auto summary = bench::render_summary_csv(rows);
    const bool ok = std::abs(rec.resource_utilization() - 0.3960) <= 1e-4 &&
                    summary.find(",14400/36366,0.3960,") != std::string::npos;
    return Outcome{ok, "ratio " + bench::format_real(rec.resource_utilization())};
  });

  report(6, "sweep sizes contain the C3 table points", [] {
    auto has = [](const std::vector<std::size_t>& s, std::size_t v) { return std::find(s.begin(), s.end(), v) != s.end(); };
    const auto a = retrainer::sweep_sizes(5000);
    const auto b = retrainer::sweep_sizes(3000);
    const bool ok = has(a, 3500) && has(a, 4000) && a.back() == 5000 && has(b, 1500) && has(b, 2400) &&
                    has(b, 2850) && b.back() == 3000;
    return Outcome{ok, "5000 and 3000 sweeps"};
  });

  report(7, "C2 with DSA ordering recovers >=15 points of Test* accuracy", [&] {
    const auto t0 = Clock::now();
    const auto& r = desk_run();
    auto cfg = r.cfg;
    cfg.metrics = {Metric::kDSA};
    cfg.configs = {RetrainConfigKind::kC2};
    cfg.retrain.epochs = 15;
    const auto scores = bench::score_stage(cfg, r.model, r.sets, threads);
    const auto records = bench::retrain_stage(cfg, r.model, r.sets, scores, threads);
    const auto& rec = records.at(0);
    const double gain = rec.best_accuracy - rec.original_accuracy;
    const double secs = since(t0) + r.train_attack_seconds;
    return Outcome{gain >= 0.15 && secs < 900.0,
                   "M " + pct(rec.original_accuracy) + " -> best " + pct(rec.best_accuracy) + " at " +
                       bench::utilization_string(rec.best_size, rec.total) + ", final " +
                       pct(rec.runs.back().accuracy_test_star) + ", retrain epochs " +
                       std::to_string(cfg.retrain.epochs)};
  });

  report(8, "C1/C2/C3 starting weights and the C3 pool", [&] {
    const auto cfg = small_config("acceptance-out/semantics");
    const auto data = bench::load_datasets(cfg);
    const auto model = bench::train_original(cfg, data.train);
    const auto sets = bench::attack_stage(cfg, model, data, threads);
    const auto scores = bench::score_stage(cfg, model, sets, threads);
    const auto fresh = cnn::build_model(model.arch, cfg.seed_init);
    auto opts = bench::retrain_options(cfg, threads);
    std::mutex mu;
    std::size_t seen = 0, bad = 0;
    opts.on_initial_state = [&](RetrainConfigKind kind, std::size_t, const cnn::ModelState& init) {
      const bool ok = kind == RetrainConfigKind::kC1 ? cnn::same_weights(init, fresh) : cnn::same_weights(init, model);
      std::lock_guard lock(mu);
      ++seen;
      bad += !ok;
    };
    bench::retrain_stage(cfg, model, sets, scores, threads, &opts);
    std::size_t pool_bad = 0;
    for (const auto& [metric, result] : scores) {
      for (std::size_t id : retrainer::retraining_pool(RetrainConfigKind::kC3, sets, result.order)) {
        pool_bad += !sets.train_star_is_adversarial(id);
      }
    }
    const std::size_t expected = cfg.configs.size() * cfg.metrics.size() * retrainer::kSweepPoints;
    return Outcome{seen == expected && bad == 0 && pool_bad == 0,
                   std::to_string(seen) + " starting states, " + std::to_string(bad) + " mismatched, " +
                       std::to_string(pool_bad) + " clean ids in C3 pools"};
  });

  report(9, "run twice gives byte-identical CSVs", [&] {
    const auto a = bench::run_pipeline(small_config("acceptance-out/run-a"), 1);
    const auto b = bench::run_pipeline(small_config("acceptance-out/run-b"), std::max<std::size_t>(threads, 2));
    std::vector<std::pair<fs::path, fs::path>> pairs{
        {a.points, b.points}, {a.summary, b.summary}, {a.comparison, b.comparison}};
    for (std::size_t i = 0; i < a.plots.size(); ++i) pairs.emplace_back(a.plots[i], b.plots[i]);
    std::size_t differing = 0;
    for (const auto& [x, y] : pairs) differing += bench::read_text(x) != bench::read_text(y);
    const bool ok = a.plots.size() == 3 && b.plots.size() == 3 && differing == 0;
    return Outcome{ok, std::to_string(pairs.size()) + " files compared, " + std::to_string(differing) + " differ"};
  });

  report(10, "trend report over 5 seeds (SA vs Random size to reach 95%)", [&] {
    auto cfg = bench::parse_config(
        "synthetic.train_per_class = 100\n"
        "synthetic.test_per_class = 25\n"
        "train.epochs = 10\n"
        "retrain.epochs = 3\n");
    cfg.output = "acceptance-out/trend";
    const auto t = bench::run_trend(cfg, 5, threads);
    const bool emitted = fs::exists(cfg.output / bench::files::kTrend);
    std::ostringstream d;
    d << "best SA " << guidance::to_string(t.best_sa) << " mean " << t.best_sa_mean << " vs Random " << t.random_mean
      << (t.holds ? ", inequality holds" : ", inequality does not hold on this seed set");
    return Outcome{emitted && !t.rows.empty(), d.str()};
  });

  report(11, "timing CSV durations", [] {
    const auto rows = bench::parse_timing_csv(bench::read_text("acceptance-out/run-a/timing.csv"));
    std::map<Metric, double> secs;
    for (const auto& r : rows) secs[r.metric] = r.seconds;
    bool ok = secs.size() == 4;
    std::ostringstream d;
    for (const auto& [m, s] : secs) {
      const std::string hms = guidance::format_hms(s);
      d << guidance::to_string(m) << " " << hms << " ";
      if (m == Metric::kRandom) {
        ok = ok && s <= 1.0 && hms <= "00:00:01";
      } else {
        ok = ok && s > 0.0 && hms > "00:00:00";
      }
    }
    const auto text = bench::read_text("acceptance-out/run-a/timing.csv");
    for (const auto& line : bench::split(text, '\n')) {
      if (line.empty() || line == bench::kTimingHeader) continue;
      const auto f = bench::split(line, ',');
      ok = ok && f.size() == 4 && f[3].size() == 8 && f[3][2] == ':' && f[3][5] == ':';
    }
    return Outcome{ok, d.str() + "(" + std::to_string(rows.size()) + " rows)"};
  });

  std::cout << (failures ? std::to_string(failures) + " criteria failed" : std::string("all criteria passed"))
            << std::endl;
  return failures ? 1 : 0;
}
