#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>

#include "gr/bench/config.hpp"
#include "gr/bench/datasets.hpp"
#include "gr/bench/pipeline.hpp"
#include "gr/bench/report.hpp"
#include "gr/bench/text.hpp"
#include "gr/error.hpp"

using namespace gr;
using namespace gr::bench;
using retrainer::RetrainConfigKind;
using guidance::Metric;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("gr_bench_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write_bytes(const fs::path& p, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error";
  return ErrorCode::kInvalidArgument;
}

// Two 3x3 u8 images with labels {0, 1}.
const std::vector<std::uint8_t> kImages = {0, 0, 8, 3, 0, 0, 0, 2, 0, 0, 0, 3, 0, 0, 0, 3,
                                           0, 0, 0, 0, 0, 0, 0, 0, 255, 10, 20, 30, 40, 50, 60, 70, 80, 90};
const std::vector<std::uint8_t> kLabels = {0, 0, 8, 1, 0, 0, 0, 2, 0, 1};

std::vector<PointRow> rows_for(RetrainConfigKind kind, Metric metric, std::size_t step, double peak_at) {
  std::vector<PointRow> rows;
  for (std::size_t i = 0; i < 20; ++i) {
    PointRow r;
    r.dataset = "toy";
    r.config = kind;
    r.metric = metric;
    r.point = i;
    r.input_size = step * (i + 1);
    r.total_inputs = step * 20;
    r.accuracy_test_star = r.input_size >= peak_at ? 0.9 : 0.5 + 0.01 * static_cast<double>(i);
    r.accuracy_test = 0.95;
    r.accuracy_adv_test = 0.25;
    r.original_accuracy = 0.4;
    rows.push_back(r);
  }
  return rows;
}

}  // namespace

TEST(Idx, ReadsUbyteAndScales) {
  const auto dir = scratch("idx_u8");
  write_bytes(dir / "i", kImages);
  write_bytes(dir / "l", kLabels);
  const auto d = load_idx_dataset(dir / "i", dir / "l");
  EXPECT_EQ(d.images.shape(), (numgrad::Shape{2, 3, 3, 1}));
  EXPECT_EQ(d.labels, (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(d.class_count, 2u);
  EXPECT_EQ(d.images[8], 1.0f);
  EXPECT_FLOAT_EQ(d.images[9], 10.0f / 255.0f);
  EXPECT_EQ(load_idx_dataset(dir / "i", dir / "l", 5).class_count, 5u);
}

TEST(Idx, MalformedFiles) {
  const auto dir = scratch("idx_bad");
  write_bytes(dir / "l", kLabels);
  auto magic = kImages;
  magic[0] = 1;
  write_bytes(dir / "magic", magic);
  EXPECT_EQ(code_of([&] { load_idx_dataset(dir / "magic", dir / "l"); }), ErrorCode::kBadMagic);
  write_bytes(dir / "short", {kImages.begin(), kImages.end() - 1});
  EXPECT_EQ(code_of([&] { load_idx_dataset(dir / "short", dir / "l"); }), ErrorCode::kTruncated);
  write_bytes(dir / "i", kImages);
  write_bytes(dir / "one", {0, 0, 8, 1, 0, 0, 0, 1, 0});
  EXPECT_EQ(code_of([&] { load_idx_dataset(dir / "i", dir / "one"); }), ErrorCode::kCountMismatch);
}

TEST(Idx, FloatRoundTripIsExact) {
  const auto dir = scratch("idx_float");
  auto d = generate_synthetic({3, 4, 6, 0.5, 9});
  d.images[0] = std::nextafter(0.6f, 0.0f);
  write_idx_dataset(d, dir / "i", dir / "l");
  const auto back = load_idx_dataset(dir / "i", dir / "l", 3);
  EXPECT_EQ(back.images, d.images);
  EXPECT_EQ(back.labels, d.labels);
  write_idx_dataset(d, dir / "qi", dir / "ql", true);
  const auto q = load_idx_dataset(dir / "qi", dir / "ql", 3);
  for (std::size_t k = 0; k < q.images.size(); ++k) EXPECT_NEAR(q.images[k], d.images[k], 0.5 / 255 + 1e-7);
}

TEST(Synthetic, DeterministicAndNoiseFree) {
  const SyntheticSpec spec{4, 10, 8, 0.3, 5};
  EXPECT_EQ(generate_synthetic(spec).images, generate_synthetic(spec).images);
  auto other = spec;
  other.seed = 6;
  EXPECT_NE(generate_synthetic(spec).images, generate_synthetic(other).images);
  const auto clean = generate_synthetic({2, 3, 4, 0.0, 1});
  for (std::size_t i = 0; i < clean.size(); ++i) {
    EXPECT_EQ(clean.labels[i], i % 2);
    for (std::size_t y = 0; y < 4; ++y) {
      for (std::size_t x = 0; x < 4; ++x) {
        const float want = clean.labels[i] == 0 ? float(y % 2 == 0) : float(x % 2 == 0);
        EXPECT_EQ(clean.images[(i * 4 + y) * 4 + x], want);
      }
    }
  }
  EXPECT_THROW(generate_synthetic({4, 10, 8, -0.1, 1}), Error);
  EXPECT_THROW(generate_synthetic({5, 10, 8, 0.1, 1}), Error);
}

TEST(Config, ParsesKeysAndComments) {
  const auto cfg = parse_config(
      "# quick run\n"
      "synthetic.train_per_class = 30\n"
      "\n"
      "retrain.epochs = 7   # trailing\n"
      "metrics = DSA,RANDOM\n"
      "configs = C3\n"
      "seed.attack = 99\n");
  EXPECT_EQ(cfg.synthetic_train.per_class, 30u);
  EXPECT_EQ(cfg.retrain.epochs, 7u);
  EXPECT_EQ(cfg.metrics, (std::vector<Metric>{Metric::kDSA, Metric::kRandom}));
  EXPECT_EQ(cfg.configs, (std::vector<RetrainConfigKind>{RetrainConfigKind::kC3}));
  EXPECT_EQ(cfg.seed_attack, 99u);
  EXPECT_EQ(cfg.seed_init, 1u);
}

TEST(Config, EchoRoundTrips) {
  auto cfg = parse_config("attack.epsilon = 0.05\nsynthetic.noise = 0.7\n");
  std::string text;
  for (const auto& [k, v] : cfg.echo()) text += k + " = " + v + "\n";
  EXPECT_EQ(parse_config(text).echo(), cfg.echo());
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  try {
    parse_config("train.epochs = 3\nbogus.key = 1\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfig);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_config("train.epochs = three\n"), Error);
  EXPECT_THROW(parse_config("metrics = KMNC\n"), Error);
  EXPECT_THROW(parse_config("attack.epsilon = 2\n"), Error);
}

TEST(Text, ShortestRoundTripReals) {
  for (double v : {0.1, 0.396, 1.0 / 3.0, 0.0, 1e-12}) EXPECT_EQ(parse_real(format_real(v)), v);
  EXPECT_EQ(format_fixed(14400.0 / 36366.0, 4), "0.3960");
  EXPECT_THROW(parse_real("0.5x"), Error);
  EXPECT_THROW(parse_u64("-1"), Error);
}

TEST(Report, PointsCsvRoundTrip) {
  auto rows = rows_for(RetrainConfigKind::kC2, Metric::kLSA, 7, 50);
  rows[3].accuracy_test_star = 1.0 / 3.0;
  const auto text = render_points_csv(rows);
  EXPECT_EQ(text.substr(0, text.find('\n')), kPointsHeader);
  EXPECT_EQ(parse_points_csv(text), rows);
}

TEST(Report, SummaryShowsUtilization) {
  const auto rows = rows_for(RetrainConfigKind::kC2, Metric::kDSA, 1800, 14400);
  auto last = rows;
  for (auto& r : last) r.total_inputs = 36366;
  last.back().input_size = 36366;
  const auto summary = render_summary_csv(last);
  EXPECT_NE(summary.find(",14400/36366,0.3960,"), std::string::npos) << summary;
  EXPECT_EQ(utilization_string(14400, 36366), "14400/36366");
  EXPECT_NO_THROW(check_summary_consistency(render_points_csv(last), summary));
  auto tampered = summary;
  tampered.replace(tampered.find("14400/36366"), 5, "14401");
  EXPECT_THROW(check_summary_consistency(render_points_csv(last), tampered), Error);
}

TEST(Report, PlotRowsSortedAndBounded) {
  std::vector<PointRow> rows;
  for (Metric m : {Metric::kRandom, Metric::kNC, Metric::kDSA, Metric::kLSA}) {
    for (auto kind : {RetrainConfigKind::kC1, RetrainConfigKind::kC2}) {
      const auto part = rows_for(kind, m, 10, 100);
      rows.insert(rows.end(), part.begin(), part.end());
    }
  }
  const auto csv = render_plot_csv(rows, RetrainConfigKind::kC2, "toy");
  auto lines = split(csv, '\n');
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  ASSERT_EQ(lines.size(), 81u);
  EXPECT_EQ(lines[0], kPlotHeader);
  std::pair<std::string, std::size_t> prev;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = split(lines[i], ',');
    ASSERT_EQ(f.size(), 3u);
    const std::pair<std::string, std::size_t> key{f[0], parse_u64(f[1])};
    if (i > 1) {
      EXPECT_LT(prev, key);
    }
    prev = key;
    const double acc = parse_real(f[2]);
    EXPECT_GE(acc, 0.0);
    EXPECT_LE(acc, 1.0);
  }
  const auto only = rows_for(RetrainConfigKind::kC3, Metric::kRandom, 5, 30);
  EXPECT_EQ(split(render_plot_csv(only, RetrainConfigKind::kC3, "toy"), '\n').size(), 22u);
  EXPECT_EQ(plot_file_name("toy", RetrainConfigKind::kC3), "plot-toy-C3.csv");
}

TEST(Report, TimingCsvRoundTrip) {
  const std::vector<TimingRow> rows{{"toy", Metric::kDSA, 14.2}, {"toy", Metric::kRandom, 1.5e-5}};
  const auto text = render_timing_csv(rows);
  EXPECT_NE(text.find(",00:00:15\n"), std::string::npos) << text;
  EXPECT_NE(text.find(",00:00:01\n"), std::string::npos) << text;
  const auto back = parse_timing_csv(text);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].seconds, 14.2);
  EXPECT_EQ(back[1].metric, Metric::kRandom);
}

TEST(Report, TrendComparesBestSaWithRandom) {
  auto record = [](Metric m, std::size_t reach) {
    retrainer::ExperimentRecord r;
    r.kind = RetrainConfigKind::kC2;
    r.metric = m;
    for (std::size_t i = 1; i <= 20; ++i) {
      retrainer::RetrainRun run;
      run.size = i * 10;
      run.accuracy_test_star = run.size >= reach ? 0.9 : 0.1;
      r.runs.push_back(run);
    }
    retrainer::summarize(r);
    return r;
  };
  std::vector<std::vector<retrainer::ExperimentRecord>> seeds;
  for (std::size_t s = 0; s < 5; ++s) {
    seeds.push_back({record(Metric::kLSA, 120), record(Metric::kDSA, 60 + 10 * s), record(Metric::kRandom, 100)});
  }
  const auto t = trend_report(seeds);
  EXPECT_EQ(t.best_sa, Metric::kDSA);
  EXPECT_EQ(t.best_sa_mean, 80.0);
  EXPECT_EQ(t.random_mean, 100.0);
  EXPECT_TRUE(t.holds);
  EXPECT_NE(render_trend_csv(t).find("DSA"), std::string::npos);
}

TEST(Manifest, HashesArtifacts) {
  const auto dir = scratch("manifest");
  write_text(dir / "a.txt", "abc");
  ExperimentConfig cfg;
  cfg.output = dir;
  write_manifest(cfg, "ok", "report");
  const auto j = nlohmann::json::parse(read_text(dir / files::kManifest));
  EXPECT_EQ(j["status"], "ok");
  EXPECT_EQ(j["artifacts"]["a.txt"], "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_FALSE(j["artifacts"].contains(files::kManifest));
}

TEST(Manifest, FailureIsRecorded) {
  const auto dir = scratch("failed");
  ExperimentConfig cfg;
  cfg.output = dir;
  cfg.source = DatasetSource::kIdx;
  cfg.train_images = dir / "missing-images";
  cfg.train_labels = dir / "missing-labels";
  cfg.test_images = cfg.train_images;
  cfg.test_labels = cfg.train_labels;
  EXPECT_THROW(run_pipeline(cfg), Error);
  const auto j = nlohmann::json::parse(read_text(dir / files::kManifest));
  EXPECT_EQ(j["status"], "failed");
  EXPECT_EQ(j["stage"], "train");
  EXPECT_FALSE(j["error"].get<std::string>().empty());
}

TEST(Config, ShippedDefaultMatchesBuiltIn) {
  auto shipped = load_config(fs::path(GR_SOURCE_DIR) / "configs" / "default.conf");
  shipped.output = ExperimentConfig{}.output;
  EXPECT_EQ(shipped.echo(), ExperimentConfig{}.echo());
}
