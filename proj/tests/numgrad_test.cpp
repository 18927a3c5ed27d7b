#include <gtest/gtest.h>

#include <cmath>

#include "gr/error.hpp"
#include "gr/numgrad/graph.hpp"
#include "gr/numgrad/sgd.hpp"
#include "support/oracles.hpp"

using namespace gr;
using namespace gr::numgrad;

namespace {

Graph identity_dense() {
  Graph g({1, 1, 2});
  g.dense("d", 2);
  auto& w = g.parameter("d.weight");
  w[0] = 1.0f;
  w[3] = 1.0f;
  return g;
}

}  // namespace

TEST(Forward, SoftmaxCrossEntropyClosedForm) {
  Graph g = identity_dense();
  const auto s = forward_eval(g, Tensor({1, 1, 2}, {1.0f, 0.0f}), 0);
  EXPECT_FLOAT_EQ(s.logits()[0], 1.0f);
  EXPECT_FLOAT_EQ(s.logits()[1], 0.0f);
  EXPECT_NEAR(s.loss, std::log1p(std::exp(-1.0)), 1e-12);
  EXPECT_NEAR(s.loss, 0.3133, 1e-4);
}

TEST(Forward, ReluClampsNegatives) {
  Graph g({1, 1, 2}, LossKind::kSum);
  g.relu("r");
  const auto s = forward_eval(g, Tensor({1, 1, 2}, {-1.0f, 2.0f}), 0);
  EXPECT_EQ(s.activations[1][0], 0.0f);
  EXPECT_EQ(s.activations[1][1], 2.0f);
}

TEST(Forward, ValidConvOfOnes) {
  Graph g({4, 4, 1}, LossKind::kSum);
  g.conv2d("c", 1, 3, 1, Padding::kValid);
  g.parameter("c.weight").fill(1.0f);
  const auto s = forward_eval(g, Tensor({4, 4, 1}, 1.0f), 0);
  ASSERT_EQ(s.logits().shape(), (Shape{2, 2, 1}));
  for (float v : s.logits().values()) EXPECT_EQ(v, 9.0f);
}

TEST(Forward, SamePaddingKeepsExtent) {
  EXPECT_EQ(conv_output_extent(5, 3, 1, Padding::kSame), 5u);
  EXPECT_EQ(conv_output_extent(5, 3, 2, Padding::kSame), 3u);
  EXPECT_EQ(conv_output_extent(5, 3, 2, Padding::kValid), 2u);
}

TEST(Forward, RejectsWrongInputShapeNamingNode) {
  Graph g = identity_dense();
  try {
    forward_eval(g, Tensor({1, 1, 3}), 0);
    FAIL() << "expected a shape error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kShapeMismatch);
    EXPECT_NE(std::string(e.what()).find("input"), std::string::npos);
  }
}

TEST(Forward, RejectsNonFiniteParameters) {
  Graph g = identity_dense();
  g.parameter("d.bias")[0] = std::nanf("");
  try {
    forward_eval(g, Tensor({1, 1, 2}), 0);
    FAIL() << "expected a non-finite error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNonFinite);
  }
}

TEST(Backward, LinearFunction) {
  Graph g({1, 1, 1}, LossKind::kSum);
  g.dense("w", 1);
  g.parameter("w.weight")[0] = 3.0f;
  const auto s = forward_eval(g, Tensor({1, 1, 1}, 2.0f), 0);
  EXPECT_EQ(s.loss, 6.0);
  const auto grads = backward_grads(g, s);
  EXPECT_EQ(grads["w.weight"][0], 2.0f);
  EXPECT_EQ(grads.input[0], 3.0f);
  EXPECT_EQ(grads["w.bias"][0], 1.0f);
}

TEST(Backward, ReluBlocksAtNegativeAndZero) {
  Graph g({1, 1, 3}, LossKind::kSum);
  g.relu("r");
  const auto s = forward_eval(g, Tensor({1, 1, 3}, {-1.0f, 0.0f, 0.5f}), 0);
  const auto grads = backward_grads(g, s);
  EXPECT_EQ(grads.input[0], 0.0f);
  EXPECT_EQ(grads.input[1], 0.0f);
  EXPECT_EQ(grads.input[2], 1.0f);
}

TEST(Backward, RequiresForwardState) {
  Graph g = identity_dense();
  ForwardState empty;
  try {
    backward_grads(g, empty);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNoForwardPass);
  }
}

TEST(Backward, MatchesFiniteDifferencesOnRandomGraphs) {
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    auto c = oracle::random_case(seed);
    const auto s = forward_eval(c.graph, c.input, c.label);
    const auto grads = backward_grads(c.graph, s);
    const auto rep = oracle::finite_difference_check(c.graph, c.input, c.label, grads);
    EXPECT_GT(rep.checked, 0u) << "seed " << seed;
    EXPECT_LT(rep.max_rel_error, 1e-3) << "seed " << seed;
  }
}

TEST(Backward, AccumulatorAveragesSamples) {
  Graph g({1, 1, 1}, LossKind::kSum);
  g.dense("w", 1);
  g.parameter("w.weight")[0] = 1.0f;
  GradientAccumulator acc(g);
  acc.add(g, forward_eval(g, Tensor({1, 1, 1}, 2.0f), 0));
  acc.add(g, forward_eval(g, Tensor({1, 1, 1}, 4.0f), 0));
  EXPECT_EQ(acc.count(), 2u);
  EXPECT_EQ(acc.mean(g)["w.weight"][0], 3.0f);
}

TEST(Sgd, PlainStep) {
  Graph g({1, 1, 1}, LossKind::kSum);
  g.dense("w", 1);
  g.parameter("w.weight")[0] = 1.0f;
  auto grads = zero_gradients(g);
  grads.params[0].value[0] = 2.0f;
  auto v = Velocity::zeros_like(g);
  sgd_step(g, grads, {0.1, 0.0}, v);
  EXPECT_NEAR(g.parameter("w.weight")[0], 0.8, 1e-7);
}

TEST(Sgd, MomentumStep) {
  Graph g({1, 1, 1}, LossKind::kSum);
  g.dense("w", 1);
  g.parameter("w.weight")[0] = 1.0f;
  auto grads = zero_gradients(g);
  grads.params[0].value[0] = 2.0f;
  auto v = Velocity::zeros_like(g);
  v.buffers[0][0] = 1.0f;
  sgd_step(g, grads, {0.1, 0.9}, v);
  EXPECT_NEAR(v.buffers[0][0], 2.9, 1e-6);
  EXPECT_NEAR(g.parameter("w.weight")[0], 0.71, 1e-6);
}

TEST(Sgd, ZeroGradientIsFixedPoint) {
  auto c = oracle::random_case(3);
  const auto before = c.graph.parameters();
  auto v = Velocity::zeros_like(c.graph);
  sgd_step(c.graph, zero_gradients(c.graph), {0.05, 0.5}, v);
  for (std::size_t i = 0; i < before.size(); ++i) EXPECT_EQ(before[i].value, c.graph.parameters()[i].value);
}

TEST(Sgd, RejectsBadHyperparameters) {
  auto c = oracle::random_case(4);
  auto v = Velocity::zeros_like(c.graph);
  const auto grads = zero_gradients(c.graph);
  EXPECT_THROW(sgd_step(c.graph, grads, {0.0, 0.5}, v), Error);
  EXPECT_THROW(sgd_step(c.graph, grads, {0.1, 1.0}, v), Error);
}
