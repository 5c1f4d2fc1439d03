#include "ivp/space.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "ivp/error.hpp"
#include "ivp/numeric.hpp"

namespace ivp {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw ShapeError("distance between vectors of dimension " + std::to_string(a.size()) +
                     " and " + std::to_string(b.size()));
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    sum += diff * diff;
  }
  return sum;
}

double distance(std::span<const double> a, std::span<const double> b) {
  return std::sqrt(squared_distance(a, b));
}

CentroidSet::CentroidSet(std::vector<Embedding> centroids, std::vector<std::size_t> counts)
    : centroids_(std::move(centroids)), counts_(std::move(counts)) {
  if (centroids_.size() != counts_.size())
    throw ShapeError("centroid and count lists differ in length");
  for (const Embedding& c : centroids_)
    if (c.size() != dim()) throw ShapeError("centroids have mixed dimensions");
}

NearestCentroid CentroidSet::nearest(std::span<const double> query) const {
  if (centroids_.empty()) throw ConfigError("centroid set is empty");
  NearestCentroid best{0, squared_distance(query, centroids_[0])};
  for (ClassIndex j = 1; j < centroids_.size(); ++j) {
    const double d = squared_distance(query, centroids_[j]);
    if (d < best.distance) best = {j, d};
  }
  best.distance = std::sqrt(best.distance);
  return best;
}

CentroidSet build_centroids(std::span<const LabeledEmbedding> train, std::size_t class_count) {
  if (class_count == 0) throw ConfigError("class count must be positive");
  if (train.empty()) throw ConfigError("cannot build centroids from an empty set");
  const std::size_t dim = train.front().embedding.size();
  std::vector<Embedding> sums(class_count, Embedding(dim, 0.0));
  std::vector<std::size_t> counts(class_count, 0);
  for (const LabeledEmbedding& p : train) {
    if (p.embedding.size() != dim) throw ShapeError("training embeddings have mixed dimensions");
    if (p.label >= class_count)
      throw ConfigError("label " + std::to_string(p.label) + " exceeds class count " +
                        std::to_string(class_count));
    for (std::size_t i = 0; i < dim; ++i) sums[p.label][i] += p.embedding[i];
    ++counts[p.label];
  }
  for (ClassIndex j = 0; j < class_count; ++j) {
    if (counts[j] == 0)
      throw ConfigError("class " + std::to_string(j) + " has no training examples");
    for (double& v : sums[j]) v /= static_cast<double>(counts[j]);
  }
  return CentroidSet(std::move(sums), std::move(counts));
}

NearestCentroid nearest_centroid(const CentroidSet& centroids, std::span<const double> query) {
  return centroids.nearest(query);
}

double silhouette(std::span<const LabeledEmbedding> points) {
  std::map<ClassIndex, std::size_t> class_slot;
  for (const LabeledEmbedding& p : points) class_slot.emplace(p.label, 0);
  if (class_slot.size() < 2) throw ConfigError("silhouette needs at least two classes");
  std::size_t next = 0;
  for (auto& [label, slot] : class_slot) slot = next++;

  const std::size_t classes = class_slot.size();
  std::vector<std::size_t> slot_of(points.size());
  std::vector<std::size_t> class_size(classes, 0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    slot_of[i] = class_slot[points[i].label];
    ++class_size[slot_of[i]];
  }

  std::vector<double> scores(points.size(), 0.0);
  std::vector<double> dist_sum(classes);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const std::size_t own = slot_of[i];
    if (class_size[own] < 2) continue;
    std::fill(dist_sum.begin(), dist_sum.end(), 0.0);
    for (std::size_t j = 0; j < points.size(); ++j)
      if (j != i) dist_sum[slot_of[j]] += distance(points[i].embedding, points[j].embedding);
    const double a = dist_sum[own] / static_cast<double>(class_size[own] - 1);
    double b = INFINITY;
    for (std::size_t s = 0; s < classes; ++s)
      if (s != own) b = std::min(b, dist_sum[s] / static_cast<double>(class_size[s]));
    const double denom = std::max(a, b);
    scores[i] = denom > 0.0 ? (b - a) / denom : 0.0;
  }
  return pairwise_sum(scores) / static_cast<double>(points.size());
}

}  // namespace ivp
