#include "ivp/kd_tree.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ivp/error.hpp"

namespace ivp {

namespace {
constexpr std::size_t kLeafSize = 8;
}

KdIndex::KdIndex(std::span<const LabeledEmbedding> points) {
  if (points.empty()) throw ConfigError("cannot build an index over no points");
  dim_ = points.front().embedding.size();
  if (dim_ == 0) throw ShapeError("cannot index zero-dimensional embeddings");
  coords_.reserve(points.size() * dim_);
  labels_.reserve(points.size());
  for (const LabeledEmbedding& p : points) {
    if (p.embedding.size() != dim_)
      throw ShapeError("indexed embeddings have mixed dimensions");
    coords_.insert(coords_.end(), p.embedding.begin(), p.embedding.end());
    labels_.push_back(p.label);
  }
  order_.resize(points.size());
  for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
  build(0, order_.size(), 0);
}

void KdIndex::build(std::size_t lo, std::size_t hi, std::size_t depth) {
  if (hi - lo <= kLeafSize) return;
  const std::size_t axis = depth % dim_;
  const std::size_t mid = lo + (hi - lo) / 2;
  auto begin = order_.begin();
  std::nth_element(begin + lo, begin + mid, begin + hi, [&](std::size_t a, std::size_t b) {
    const double va = coords_[a * dim_ + axis];
    const double vb = coords_[b * dim_ + axis];
    return va < vb || (va == vb && a < b);
  });
  build(lo, mid, depth + 1);
  build(mid + 1, hi, depth + 1);
}

void KdIndex::offer(std::span<const double> query, std::size_t index, std::size_t k,
                    std::vector<Candidate>& heap) const {
  const double* p = coords_.data() + index * dim_;
  double sum = 0.0;
  for (std::size_t i = 0; i < dim_; ++i) {
    const double diff = query[i] - p[i];
    sum += diff * diff;
  }
  const Candidate candidate{sum, index};
  if (heap.size() < k) {
    heap.push_back(candidate);
    std::push_heap(heap.begin(), heap.end());
  } else if (candidate < heap.front()) {
    std::pop_heap(heap.begin(), heap.end());
    heap.back() = candidate;
    std::push_heap(heap.begin(), heap.end());
  }
}

void KdIndex::search(std::span<const double> query, std::size_t lo, std::size_t hi,
                     std::size_t depth, std::size_t k, std::vector<Candidate>& heap) const {
  if (hi - lo <= kLeafSize) {
    for (std::size_t i = lo; i < hi; ++i) offer(query, order_[i], k, heap);
    return;
  }
  const std::size_t axis = depth % dim_;
  const std::size_t mid = lo + (hi - lo) / 2;
  const std::size_t split = order_[mid];
  const double gap = query[axis] - coords_[split * dim_ + axis];

  offer(query, split, k, heap);
  const bool lower_first = gap < 0.0;
  if (lower_first) {
    search(query, lo, mid, depth + 1, k, heap);
  } else {
    search(query, mid + 1, hi, depth + 1, k, heap);
  }
  // Points on the far side are at least |gap| away along this axis. Visit
  // on equality too, since an equidistant point there may win the index tie.
  if (heap.size() < k || gap * gap <= heap.front().squared) {
    if (lower_first) {
      search(query, mid + 1, hi, depth + 1, k, heap);
    } else {
      search(query, lo, mid, depth + 1, k, heap);
    }
  }
}

std::vector<Neighbor> KdIndex::knn(std::span<const double> query, std::size_t k) const {
  if (query.size() != dim_)
    throw ShapeError("query has dimension " + std::to_string(query.size()) + ", index has " +
                     std::to_string(dim_));
  if (k == 0) throw ConfigError("k must be positive");
  if (k > size())
    throw ConfigError("k = " + std::to_string(k) + " exceeds index size " +
                      std::to_string(size()));
  std::vector<Candidate> heap;
  heap.reserve(k);
  search(query, 0, order_.size(), 0, k, heap);
  std::sort_heap(heap.begin(), heap.end());
  std::vector<Neighbor> result;
  result.reserve(heap.size());
  for (const Candidate& c : heap) result.push_back({c.index, labels_[c.index], std::sqrt(c.squared)});
  return result;
}

KdIndex build_index(std::span<const LabeledEmbedding> points) { return KdIndex(points); }

std::vector<Neighbor> knn(const KdIndex& index, std::span<const double> query, std::size_t k) {
  return index.knn(query, k);
}

}  // namespace ivp
