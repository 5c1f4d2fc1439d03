#pragma once

#include <array>
#include <compare>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "ivp/kd_tree.hpp"
#include "ivp/space.hpp"

namespace ivp {

enum class TaxonomyKind { KnnV1, KnnV2, NcV1, NcV2, BaseV1, BaseV2, BaseV3, BaseV4 };

inline constexpr std::array<TaxonomyKind, 8> kAllTaxonomies = {
    TaxonomyKind::KnnV1,  TaxonomyKind::KnnV2,  TaxonomyKind::NcV1,   TaxonomyKind::NcV2,
    TaxonomyKind::BaseV1, TaxonomyKind::BaseV2, TaxonomyKind::BaseV3, TaxonomyKind::BaseV4};

// Names used in config files and on the command line: knn_v1, nc_v2, base_v3, ...
std::string to_string(TaxonomyKind kind);
std::optional<TaxonomyKind> parse_taxonomy_kind(std::string_view name);

bool uses_index(TaxonomyKind kind);
bool uses_centroids(TaxonomyKind kind);
bool uses_softmax(TaxonomyKind kind);

struct BaselineThresholds {
  double max_output = 0.75;     // base_v2: top probability
  double second_output = 0.25;  // base_v3: second-highest probability
  double top_gap = 0.5;         // base_v4: top minus second-highest

  bool operator==(const BaselineThresholds&) const = default;
};

struct TaxonomyConfig {
  TaxonomyKind kind = TaxonomyKind::NcV1;
  std::size_t k = 5;
  std::optional<double> theta;  // nc_v2 only; empty means resolve from proper training
  std::size_t class_count = 0;
  BaselineThresholds thresholds;

  void validate() const;

  // knn_v1, nc_v1, base_v1: c. knn_v2: c * (k - floor(k / c)). nc_v2, base_v2..4: 2c.
  std::size_t category_count() const;
  // Number of sub-categories each top-level class is split into.
  std::size_t categories_per_class() const;

  bool operator==(const TaxonomyConfig&) const = default;
};

struct CategoryId {
  std::size_t value = 0;
  auto operator<=>(const CategoryId&) const = default;
};

struct Assignment {
  CategoryId category;
  // knn_v2 only: the disagreement count overflowed its slot and was clamped.
  bool clamped = false;
};

// Majority label among the neighbours. Tied classes are separated by the
// smaller summed neighbour distance, then by the lower class index.
ClassIndex knn_vote(std::span<const Neighbor> neighbors);

Assignment knn_v2_category(ClassIndex predicted, std::size_t disagreements, std::size_t k,
                           std::size_t class_count);

CategoryId assign_knn_v1(const KdIndex& index, std::span<const double> embedding,
                         const TaxonomyConfig& config);
CategoryId assign_knn_v2(const KdIndex& index, std::span<const double> embedding,
                         const TaxonomyConfig& config);
Assignment knn_v2_assignment(const KdIndex& index, std::span<const double> embedding,
                             const TaxonomyConfig& config);

CategoryId assign_nc_v1(const CentroidSet& centroids, std::span<const double> embedding,
                        const TaxonomyConfig& config);
// h = 0 iff the nearest-centroid distance is <= theta. Throws ConfigError
// when theta is unresolved.
CategoryId assign_nc_v2(const CentroidSet& centroids, std::span<const double> embedding,
                        const TaxonomyConfig& config);

// Throws ConfigError unless the vector has class_count non-negative entries summing to 1 +- 1e-6.
void validate_softmax(std::span<const double> probabilities, std::size_t class_count);

CategoryId assign_baseline(std::span<const double> probabilities, const TaxonomyConfig& config);

// Median distance from each proper-training point to its own class centroid,
// averaging the two middle values for even counts. A zero median falls back
// to half the smallest positive distance between centroids.
double resolve_theta(const CentroidSet& centroids, std::span<const LabeledEmbedding> proper_training);

struct TaxonomyInput {
  std::span<const double> embedding;
  std::span<const double> softmax;
};

// A configured taxonomy bound to the proper-training data it needs
// (k-d index or centroids). Immutable and safe to share across threads.
class Taxonomy {
 public:
  // Resolves theta for nc_v2 when it is not set. Softmax taxonomies ignore
  // the training embeddings.
  static Taxonomy fit(TaxonomyConfig config, std::span<const LabeledEmbedding> proper_training);

  const TaxonomyConfig& config() const { return config_; }
  std::size_t category_count() const { return config_.category_count(); }

  Assignment assign(const TaxonomyInput& input) const;

  const KdIndex* index() const { return index_.get(); }
  const CentroidSet* centroids() const { return centroids_ ? &*centroids_ : nullptr; }

 private:
  explicit Taxonomy(TaxonomyConfig config) : config_(std::move(config)) {}

  TaxonomyConfig config_;
  std::shared_ptr<const KdIndex> index_;
  std::optional<CentroidSet> centroids_;
};

}  // namespace ivp
