#pragma once

#include <span>
#include <vector>

#include "ivp/space.hpp"

namespace ivp {

struct Neighbor {
  std::size_t index;  // insertion position in the indexed list
  ClassIndex label;
  double distance;

  bool operator==(const Neighbor&) const = default;
};

// Exact k-nearest-neighbour index. The tree is stored implicitly in a
// permutation of the input: each range [lo, hi) holds its median (by the
// current axis, ties by insertion position) at lo + (hi - lo) / 2, with the
// lower half before it. Axes cycle with depth. Small ranges are leaf buckets.
//
// Results equal an exhaustive scan ordered by (distance, insertion position).
class KdIndex {
 public:
  explicit KdIndex(std::span<const LabeledEmbedding> points);

  std::size_t size() const { return labels_.size(); }
  std::size_t dim() const { return dim_; }

  std::span<const double> point(std::size_t index) const {
    return {coords_.data() + index * dim_, dim_};
  }
  ClassIndex label(std::size_t index) const { return labels_[index]; }

  // Ascending by distance; throws ConfigError when k is 0 or exceeds size().
  std::vector<Neighbor> knn(std::span<const double> query, std::size_t k) const;

 private:
  struct Candidate {
    double squared;
    std::size_t index;
    bool operator<(const Candidate& other) const {
      return squared < other.squared || (squared == other.squared && index < other.index);
    }
  };

  void build(std::size_t lo, std::size_t hi, std::size_t depth);
  void search(std::span<const double> query, std::size_t lo, std::size_t hi, std::size_t depth,
              std::size_t k, std::vector<Candidate>& heap) const;
  void offer(std::span<const double> query, std::size_t index, std::size_t k,
             std::vector<Candidate>& heap) const;

  std::size_t dim_ = 0;
  std::vector<double> coords_;
  std::vector<ClassIndex> labels_;
  std::vector<std::size_t> order_;
};

KdIndex build_index(std::span<const LabeledEmbedding> points);

std::vector<Neighbor> knn(const KdIndex& index, std::span<const double> query, std::size_t k);

}  // namespace ivp
