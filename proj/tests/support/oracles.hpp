#pragma once
// Independent 64-bit reference computations used as test oracles. Nothing
// here calls into the library's forward, backward or metric code.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "gr/numgrad/graph.hpp"
#include "gr/pcg32.hpp"

namespace gr::oracle {

// Records every relu sign and maxpool winner so a finite-difference step that
// crosses a kink can be detected and skipped.
struct Pattern {
  std::vector<std::int64_t> marks;
  bool operator==(const Pattern&) const = default;
};

struct RefParams {
  std::vector<std::vector<double>> values;  // graph parameter order
};

inline RefParams ref_params(const numgrad::Graph& g) {
  RefParams p;
  for (const auto& prm : g.parameters()) p.values.emplace_back(prm.value.values().begin(), prm.value.values().end());
  return p;
}

inline double ref_loss(const numgrad::Graph& g, const RefParams& p, std::vector<double> x, std::size_t label,
                       Pattern* pattern = nullptr) {
  using numgrad::OpKind;
  for (const auto& n : g.nodes()) {
    std::vector<double> y;
    switch (n.kind) {
      case OpKind::kConv2d: {
        const std::size_t H = n.in_shape[0], W = n.in_shape[1], C = n.in_shape[2];
        const std::size_t OH = n.out_shape[0], OW = n.out_shape[1], F = n.filters, K = n.kernel, S = n.stride;
        std::size_t pt = 0, pl = 0;
        if (n.padding == numgrad::Padding::kSame) {
          const std::size_t nh = (OH - 1) * S + K, nw = (OW - 1) * S + K;
          pt = nh > H ? (nh - H) / 2 : 0;
          pl = nw > W ? (nw - W) / 2 : 0;
        }
        const auto& w = p.values[static_cast<std::size_t>(n.weight)];
        const auto& b = p.values[static_cast<std::size_t>(n.bias)];
        y.assign(OH * OW * F, 0.0);
        for (std::size_t oy = 0; oy < OH; ++oy)
          for (std::size_t ox = 0; ox < OW; ++ox)
            for (std::size_t f = 0; f < F; ++f) {
              double acc = b[f];
              for (std::size_t ky = 0; ky < K; ++ky)
                for (std::size_t kx = 0; kx < K; ++kx) {
                  const long iy = static_cast<long>(oy * S + ky) - static_cast<long>(pt);
                  const long ix = static_cast<long>(ox * S + kx) - static_cast<long>(pl);
                  if (iy < 0 || ix < 0 || iy >= static_cast<long>(H) || ix >= static_cast<long>(W)) continue;
                  for (std::size_t c = 0; c < C; ++c) {
                    acc += x[(static_cast<std::size_t>(iy) * W + static_cast<std::size_t>(ix)) * C + c] *
                           w[((ky * K + kx) * C + c) * F + f];
                  }
                }
              y[(oy * OW + ox) * F + f] = acc;
            }
        break;
      }
      case OpKind::kMaxPool2d: {
        const std::size_t W = n.in_shape[1], C = n.in_shape[2];
        const std::size_t OH = n.out_shape[0], OW = n.out_shape[1], P = n.pool;
        y.assign(OH * OW * C, 0.0);
        for (std::size_t oy = 0; oy < OH; ++oy)
          for (std::size_t ox = 0; ox < OW; ++ox)
            for (std::size_t c = 0; c < C; ++c) {
              double best = -std::numeric_limits<double>::infinity();
              std::int64_t where = -1;
              for (std::size_t ky = 0; ky < P; ++ky)
                for (std::size_t kx = 0; kx < P; ++kx) {
                  const std::size_t idx = ((oy * P + ky) * W + ox * P + kx) * C + c;
                  if (x[idx] > best) {
                    best = x[idx];
                    where = static_cast<std::int64_t>(idx);
                  }
                }
              y[(oy * OW + ox) * C + c] = best;
              if (pattern) pattern->marks.push_back(where);
            }
        break;
      }
      case OpKind::kDense: {
        const auto& w = p.values[static_cast<std::size_t>(n.weight)];
        const auto& b = p.values[static_cast<std::size_t>(n.bias)];
        y.assign(n.units, 0.0);
        for (std::size_t u = 0; u < n.units; ++u) {
          double acc = b[u];
          for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * w[i * n.units + u];
          y[u] = acc;
        }
        break;
      }
      case OpKind::kRelu: {
        y.resize(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
          y[i] = x[i] > 0.0 ? x[i] : 0.0;
          if (pattern) pattern->marks.push_back(x[i] > 0.0 ? 1 : 0);
        }
        break;
      }
    }
    x = std::move(y);
  }
  if (g.loss() == numgrad::LossKind::kSum) return std::accumulate(x.begin(), x.end(), 0.0);
  const double m = *std::max_element(x.begin(), x.end());
  double s = 0.0;
  for (double v : x) s += std::exp(v - m);
  return m + std::log(s) - x[label];
}

struct FdReport {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0;
};

/// Central differences of the reference loss against the given gradients,
/// over every parameter and input coordinate. Coordinates whose ±h step
/// changes a relu sign or pool winner are skipped.
inline FdReport finite_difference_check(const numgrad::Graph& g, const numgrad::Tensor& input, std::size_t label,
                                        const numgrad::GradientBundle& grads, double h = 1e-3) {
  FdReport rep;
  RefParams base = ref_params(g);
  std::vector<double> x(input.values().begin(), input.values().end());
  Pattern p0;
  ref_loss(g, base, x, label, &p0);
  auto compare = [&](double analytic, double plus, double minus, const Pattern& pp, const Pattern& pm) {
    if (!(pp == p0) || !(pm == p0)) {
      ++rep.skipped;
      return;
    }
    const double numeric = (plus - minus) / (2.0 * h);
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-2});
    rep.max_rel_error = std::max(rep.max_rel_error, std::abs(analytic - numeric) / denom);
    ++rep.checked;
  };
  for (std::size_t k = 0; k < base.values.size(); ++k) {
    for (std::size_t i = 0; i < base.values[k].size(); ++i) {
      RefParams q = base;
      Pattern pp, pm;
      q.values[k][i] = base.values[k][i] + h;
      const double plus = ref_loss(g, q, x, label, &pp);
      q.values[k][i] = base.values[k][i] - h;
      const double minus = ref_loss(g, q, x, label, &pm);
      compare(grads.params[k].value[i], plus, minus, pp, pm);
    }
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    auto xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    Pattern pp, pm;
    const double plus = ref_loss(g, base, xp, label, &pp);
    const double minus = ref_loss(g, base, xm, label, &pm);
    compare(grads.input[i], plus, minus, pp, pm);
  }
  return rep;
}

/// A random small conv/pool/dense graph with random weights and input.
struct RandomCase {
  numgrad::Graph graph;
  numgrad::Tensor input;
  std::size_t label = 0;
};

inline RandomCase random_case(std::uint64_t seed) {
  Pcg32 rng(seed);
  const std::size_t side = 4 + rng.bounded(4);
  const std::size_t channels = 1 + rng.bounded(2);
  const auto loss = rng.bounded(4) == 0 ? numgrad::LossKind::kSum : numgrad::LossKind::kSoftmaxCrossEntropy;
  numgrad::Graph g({side, side, channels}, loss);
  const std::size_t stride = 1 + rng.bounded(2);
  g.conv2d("c1", 2 + rng.bounded(3), rng.bounded(2) ? 3 : 2, stride,
           rng.bounded(2) ? numgrad::Padding::kSame : numgrad::Padding::kValid);
  g.relu("r1");
  if (g.output_shape()[0] >= 2 && rng.bounded(2)) g.maxpool2d("p1", 2);
  if (rng.bounded(2) && g.output_shape()[0] >= 2) {
    g.conv2d("c2", 2 + rng.bounded(2), 2, 1, numgrad::Padding::kSame);
    g.relu("r2");
  }
  g.dense("d1", 3 + rng.bounded(4));
  g.relu("r3");
  const std::size_t classes = 2 + rng.bounded(3);
  g.dense("out", classes);
  for (auto& prm : g.parameters()) {
    for (float& v : prm.value.values()) v = static_cast<float>(rng.uniform() * 1.2 - 0.6);
  }
  RandomCase c;
  c.input = numgrad::Tensor(g.input_shape());
  for (float& v : c.input.values()) v = static_cast<float>(rng.uniform());
  c.label = rng.bounded(static_cast<std::uint32_t>(classes));
  c.graph = std::move(g);
  return c;
}

/// -log of the mean product-Gaussian density, summed directly (no log-space
/// tricks); fine for the small, well-scaled cases it is used on.
inline double lsa_direct(const std::vector<std::vector<double>>& samples, const std::vector<double>& query,
                         const std::vector<double>& bandwidth) {
  const double pi = std::acos(-1.0);
  double total = 0.0;
  for (const auto& s : samples) {
    double k = 1.0;
    for (std::size_t j = 0; j < query.size(); ++j) {
      const double z = (query[j] - s[j]) / bandwidth[j];
      k *= std::exp(-0.5 * z * z) / (std::sqrt(2.0 * pi) * bandwidth[j]);
    }
    total += k;
  }
  return -std::log(total / static_cast<double>(samples.size()) + 1e-300);
}

/// Sample standard deviation (ddof = 1).
inline double sample_std(const std::vector<double>& v) {
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

inline double euclid(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

/// Exhaustive DSA: nearest same-class reference x_a (lowest index on ties),
/// then the other-class reference nearest x_a.
inline double dsa_exhaustive(const std::vector<std::vector<double>>& refs, const std::vector<std::size_t>& classes,
                             const std::vector<double>& query, std::size_t predicted, std::size_t skip = SIZE_MAX) {
  std::size_t a = SIZE_MAX;
  double da = 0.0;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    if (i == skip || classes[i] != predicted) continue;
    const double d = euclid(query, refs[i]);
    if (a == SIZE_MAX || d < da) {
      a = i;
      da = d;
    }
  }
  double db = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < refs.size(); ++i) {
    if (i == skip || classes[i] == predicted) continue;
    db = std::min(db, euclid(refs[a], refs[i]));
  }
  return db == 0.0 ? 1e12 : da / db;
}

}  // namespace gr::oracle
