#pragma once

// Reference implementations used only by tests. Each one follows the textbook
// definition directly and shares no code with the library routine it checks.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <vector>

#include "ivp/mlp.hpp"
#include "ivp/random.hpp"
#include "ivp/space.hpp"

namespace oracle {

struct ScanHit {
  std::size_t index;
  double distance;
};

inline double euclid(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

// Exhaustive k-NN: every point scored, stable sort by (distance, index).
inline std::vector<ScanHit> knn_scan(const std::vector<ivp::LabeledEmbedding>& points,
                                     const std::vector<double>& query, std::size_t k) {
  std::vector<ScanHit> all;
  for (std::size_t i = 0; i < points.size(); ++i) all.push_back({i, euclid(points[i].embedding, query)});
  std::stable_sort(all.begin(), all.end(),
                   [](const ScanHit& a, const ScanHit& b) { return a.distance < b.distance; });
  all.resize(k);
  return all;
}

// O(n^2) silhouette straight from the definition; singleton classes score 0.
inline double silhouette(const std::vector<ivp::LabeledEmbedding>& points) {
  std::map<std::size_t, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < points.size(); ++i) members[points[i].label].push_back(i);
  double total = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& own = members[points[i].label];
    if (own.size() == 1) continue;
    double a = 0.0;
    for (std::size_t j : own)
      if (j != i) a += euclid(points[i].embedding, points[j].embedding);
    a /= static_cast<double>(own.size() - 1);
    double b = INFINITY;
    for (const auto& [label, idx] : members) {
      if (label == points[i].label) continue;
      double m = 0.0;
      for (std::size_t j : idx) m += euclid(points[i].embedding, points[j].embedding);
      b = std::min(b, m / static_cast<double>(idx.size()));
    }
    const double s = std::max(a, b) > 0.0 ? (b - a) / std::max(a, b) : 0.0;
    total += s;
  }
  return total / static_cast<double>(points.size());
}

// Central differences of `loss` over every parameter, in the library's
// Gradient layout.
inline ivp::mlp::Gradient finite_difference(const ivp::mlp::MlpParams& params,
                                            const std::function<double(const ivp::mlp::MlpParams&)>& loss,
                                            double step) {
  ivp::mlp::MlpParams probe = params;
  ivp::mlp::Gradient grad;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    ivp::mlp::Layer g = params.layers[l];
    auto perturb = [&](double& slot, double& out) {
      const double saved = slot;
      slot = saved + step;
      const double up = loss(probe);
      slot = saved - step;
      const double down = loss(probe);
      slot = saved;
      out = (up - down) / (2.0 * step);
    };
    for (std::size_t i = 0; i < g.weights.size(); ++i) perturb(probe.layers[l].weights[i], g.weights[i]);
    for (std::size_t i = 0; i < g.bias.size(); ++i) perturb(probe.layers[l].bias[i], g.bias[i]);
    grad.push_back(std::move(g));
  }
  return grad;
}

struct GradientDiscrepancy {
  double relative;      // ||a - n|| / max(||a||, ||n||); 0 when both vanish
  bool entries_within;  // every |a - n| <= tol * max(1, |a|, |n|)
};

inline GradientDiscrepancy compare_gradients(const ivp::mlp::Gradient& analytic,
                                             const ivp::mlp::Gradient& numeric, double tol) {
  double diff = 0.0, na = 0.0, nn = 0.0;
  bool within = true;
  auto visit = [&](double a, double n) {
    diff += (a - n) * (a - n);
    na += a * a;
    nn += n * n;
    if (std::abs(a - n) > tol * std::max({1.0, std::abs(a), std::abs(n)})) within = false;
  };
  for (std::size_t l = 0; l < analytic.size(); ++l) {
    for (std::size_t i = 0; i < analytic[l].weights.size(); ++i)
      visit(analytic[l].weights[i], numeric[l].weights[i]);
    for (std::size_t i = 0; i < analytic[l].bias.size(); ++i)
      visit(analytic[l].bias[i], numeric[l].bias[i]);
  }
  const double scale = std::sqrt(std::max(na, nn));
  return {scale > 0.0 ? std::sqrt(diff) / scale : 0.0, within};
}

// Random network with dims <= [6, 5, 4] and a random pair whose hinge is
// either clearly active or clearly inactive (never at the kink d = m).
struct GradientCase {
  ivp::mlp::MlpParams params;
  ivp::mlp::PairExample pair;
  double margin;
};

inline GradientCase random_gradient_case(ivp::Rng& rng) {
  std::vector<std::size_t> dims{1 + rng.below(6), 1 + rng.below(5), 1 + rng.below(4)};
  GradientCase c{ivp::mlp::zero_params(dims, ivp::mlp::Mode::Embedding), {}, 1.0};
  for (auto& layer : c.params.layers) {
    for (double& w : layer.weights) w = rng.uniform(-1.0, 1.0);
    for (double& b : layer.bias) b = rng.uniform(-1.0, 1.0);
  }
  for (std::size_t i = 0; i < dims[0]; ++i) {
    c.pair.x1.push_back(rng.normal());
    c.pair.x2.push_back(rng.normal());
  }
  c.pair.same_class = rng.below(2) == 0;
  const double d = euclid(ivp::mlp::forward(c.params, c.pair.x1), ivp::mlp::forward(c.params, c.pair.x2));
  if (!c.pair.same_class) c.margin = rng.below(4) == 0 ? d * rng.uniform(0.3, 0.8) : d * rng.uniform(1.2, 3.0);
  if (!(c.margin > 0.0)) c.margin = 1.0;
  return c;
}

}  // namespace oracle
