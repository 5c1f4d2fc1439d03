#pragma once

#include <span>
#include <vector>

#include "ivp/types.hpp"

namespace ivp {

using Embedding = std::vector<double>;

struct LabeledEmbedding {
  Embedding embedding;
  ClassIndex label = 0;
};

// Euclidean norm of a - b. Throws ShapeError on dimension mismatch.
double distance(std::span<const double> a, std::span<const double> b);
double squared_distance(std::span<const double> a, std::span<const double> b);

struct NearestCentroid {
  ClassIndex label;
  double distance;
};

// Per-class mean embedding, one per class in [0, class_count).
class CentroidSet {
 public:
  CentroidSet() = default;
  CentroidSet(std::vector<Embedding> centroids, std::vector<std::size_t> counts);

  std::size_t class_count() const { return centroids_.size(); }
  std::size_t dim() const { return centroids_.empty() ? 0 : centroids_.front().size(); }
  const Embedding& centroid(ClassIndex label) const { return centroids_.at(label); }
  std::size_t count(ClassIndex label) const { return counts_.at(label); }
  const std::vector<Embedding>& centroids() const { return centroids_; }

  // Closest centroid; equal distances go to the lower class index.
  NearestCentroid nearest(std::span<const double> query) const;

 private:
  std::vector<Embedding> centroids_;
  std::vector<std::size_t> counts_;
};

// Throws ConfigError naming the first class with no examples.
CentroidSet build_centroids(std::span<const LabeledEmbedding> train, std::size_t class_count);

NearestCentroid nearest_centroid(const CentroidSet& centroids, std::span<const double> query);

// Mean silhouette coefficient with Euclidean distance. Points alone in
// their class score 0. Requires at least two classes.
double silhouette(std::span<const LabeledEmbedding> points);

}  // namespace ivp
