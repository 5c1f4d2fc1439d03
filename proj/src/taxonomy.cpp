#include "ivp/taxonomy.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "ivp/error.hpp"

namespace ivp {

namespace {

struct KindName {
  TaxonomyKind kind;
  const char* name;
};

constexpr KindName kKindNames[] = {
    {TaxonomyKind::KnnV1, "knn_v1"},   {TaxonomyKind::KnnV2, "knn_v2"},
    {TaxonomyKind::NcV1, "nc_v1"},     {TaxonomyKind::NcV2, "nc_v2"},
    {TaxonomyKind::BaseV1, "base_v1"}, {TaxonomyKind::BaseV2, "base_v2"},
    {TaxonomyKind::BaseV3, "base_v3"}, {TaxonomyKind::BaseV4, "base_v4"},
};

void check_embedding_dim(std::size_t got, std::size_t want) {
  if (got != want)
    throw ShapeError("embedding has dimension " + std::to_string(got) + ", taxonomy expects " +
                     std::to_string(want));
}

struct TopTwo {
  ClassIndex top;
  double top_value;
  double second_value;
};

TopTwo top_two(std::span<const double> p) {
  TopTwo result{0, p[0], -INFINITY};
  for (ClassIndex j = 1; j < p.size(); ++j) {
    if (p[j] > result.top_value) {
      result.second_value = result.top_value;
      result.top_value = p[j];
      result.top = j;
    } else if (p[j] > result.second_value) {
      result.second_value = p[j];
    }
  }
  return result;
}

}  // namespace

std::string to_string(TaxonomyKind kind) {
  for (const auto& entry : kKindNames)
    if (entry.kind == kind) return entry.name;
  return "unknown";
}

std::optional<TaxonomyKind> parse_taxonomy_kind(std::string_view name) {
  for (const auto& entry : kKindNames)
    if (name == entry.name) return entry.kind;
  return std::nullopt;
}

bool uses_index(TaxonomyKind kind) {
  return kind == TaxonomyKind::KnnV1 || kind == TaxonomyKind::KnnV2;
}

bool uses_centroids(TaxonomyKind kind) {
  return kind == TaxonomyKind::NcV1 || kind == TaxonomyKind::NcV2;
}

bool uses_softmax(TaxonomyKind kind) { return !uses_index(kind) && !uses_centroids(kind); }

void TaxonomyConfig::validate() const {
  if (class_count == 0) throw ConfigError("taxonomy needs a positive class count");
  if (uses_index(kind) && k == 0) throw ConfigError("k must be at least 1");
  if (kind == TaxonomyKind::KnnV2 && k - k / class_count == 0)
    throw ConfigError("knn_v2 needs k - floor(k / c) >= 1");
  if (theta && !(*theta > 0.0 && std::isfinite(*theta)))
    throw ConfigError("theta must be positive");
  if (uses_softmax(kind) && class_count < 2)
    throw ConfigError("softmax taxonomies need at least two classes");
  for (double t : {thresholds.max_output, thresholds.second_output, thresholds.top_gap})
    if (!std::isfinite(t)) throw ConfigError("baseline thresholds must be finite");
}

std::size_t TaxonomyConfig::categories_per_class() const {
  switch (kind) {
    case TaxonomyKind::KnnV1:
    case TaxonomyKind::NcV1:
    case TaxonomyKind::BaseV1:
      return 1;
    case TaxonomyKind::KnnV2:
      return k - k / class_count;
    case TaxonomyKind::NcV2:
    case TaxonomyKind::BaseV2:
    case TaxonomyKind::BaseV3:
    case TaxonomyKind::BaseV4:
      return 2;
  }
  return 1;
}

std::size_t TaxonomyConfig::category_count() const {
  return class_count * categories_per_class();
}

ClassIndex knn_vote(std::span<const Neighbor> neighbors) {
  if (neighbors.empty()) throw ConfigError("cannot vote over zero neighbours");
  ClassIndex max_label = 0;
  for (const Neighbor& n : neighbors) max_label = std::max(max_label, n.label);
  std::vector<std::size_t> votes(max_label + 1, 0);
  std::vector<double> summed(max_label + 1, 0.0);
  for (const Neighbor& n : neighbors) {
    ++votes[n.label];
    summed[n.label] += n.distance;
  }
  ClassIndex best = neighbors.front().label;
  for (ClassIndex j = 0; j <= max_label; ++j) {
    if (votes[j] == 0) continue;
    if (votes[j] > votes[best] || (votes[j] == votes[best] && summed[j] < summed[best]) ||
        (votes[j] == votes[best] && summed[j] == summed[best] && j < best))
      best = j;
  }
  return best;
}

Assignment knn_v2_category(ClassIndex predicted, std::size_t disagreements, std::size_t k,
                           std::size_t class_count) {
  if (class_count == 0 || predicted >= class_count)
    throw ConfigError("predicted class out of range");
  const std::size_t width = k - k / class_count;
  Assignment result;
  if (disagreements >= width) {
    disagreements = width - 1;
    result.clamped = true;
  }
  result.category = {predicted * width + disagreements};
  return result;
}

Assignment knn_v2_assignment(const KdIndex& index, std::span<const double> embedding,
                             const TaxonomyConfig& config) {
  const auto neighbors = index.knn(embedding, config.k);
  const ClassIndex predicted = knn_vote(neighbors);
  const auto disagreements = static_cast<std::size_t>(
      std::count_if(neighbors.begin(), neighbors.end(),
                    [&](const Neighbor& n) { return n.label != predicted; }));
  return knn_v2_category(predicted, disagreements, config.k, config.class_count);
}

CategoryId assign_knn_v1(const KdIndex& index, std::span<const double> embedding,
                         const TaxonomyConfig& config) {
  const ClassIndex predicted = knn_vote(index.knn(embedding, config.k));
  if (predicted >= config.class_count) throw ConfigError("neighbour label exceeds class count");
  return {predicted};
}

CategoryId assign_knn_v2(const KdIndex& index, std::span<const double> embedding,
                         const TaxonomyConfig& config) {
  return knn_v2_assignment(index, embedding, config).category;
}

CategoryId assign_nc_v1(const CentroidSet& centroids, std::span<const double> embedding,
                        const TaxonomyConfig&) {
  check_embedding_dim(embedding.size(), centroids.dim());
  return {centroids.nearest(embedding).label};
}

CategoryId assign_nc_v2(const CentroidSet& centroids, std::span<const double> embedding,
                        const TaxonomyConfig& config) {
  if (!config.theta) throw ConfigError("nc_v2 needs a resolved theta");
  check_embedding_dim(embedding.size(), centroids.dim());
  const NearestCentroid nearest = centroids.nearest(embedding);
  const std::size_t h = nearest.distance <= *config.theta ? 0 : 1;
  return {2 * nearest.label + h};
}

void validate_softmax(std::span<const double> probabilities, std::size_t class_count) {
  if (probabilities.size() != class_count)
    throw ConfigError("softmax vector has " + std::to_string(probabilities.size()) +
                      " entries, expected " + std::to_string(class_count));
  double total = 0.0;
  for (double p : probabilities) {
    if (!(p >= 0.0) || !std::isfinite(p))
      throw ConfigError("softmax entries must be finite and non-negative");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-6)
    throw ConfigError("softmax entries sum to " + std::to_string(total) + ", not 1");
}

CategoryId assign_baseline(std::span<const double> probabilities, const TaxonomyConfig& config) {
  if (!uses_softmax(config.kind)) throw ConfigError("not a softmax taxonomy");
  if (config.class_count < 2) throw ConfigError("softmax taxonomies need at least two classes");
  validate_softmax(probabilities, config.class_count);
  const TopTwo t = top_two(probabilities);
  std::size_t h = 0;
  switch (config.kind) {
    case TaxonomyKind::BaseV1:
      return {t.top};
    case TaxonomyKind::BaseV2:
      h = t.top_value >= config.thresholds.max_output ? 0 : 1;
      break;
    case TaxonomyKind::BaseV3:
      h = t.second_value <= config.thresholds.second_output ? 0 : 1;
      break;
    case TaxonomyKind::BaseV4:
      h = t.top_value - t.second_value >= config.thresholds.top_gap ? 0 : 1;
      break;
    default:
      break;
  }
  return {2 * t.top + h};
}

namespace {

double median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace

double resolve_theta(const CentroidSet& centroids,
                     std::span<const LabeledEmbedding> proper_training) {
  if (proper_training.empty()) throw ConfigError("cannot resolve theta from an empty set");
  std::vector<double> distances;
  distances.reserve(proper_training.size());
  for (const LabeledEmbedding& p : proper_training)
    distances.push_back(distance(p.embedding, centroids.centroid(p.label)));
  const double theta = median(std::move(distances));
  if (theta > 0.0) return theta;

  double closest = INFINITY;
  const auto& cs = centroids.centroids();
  for (std::size_t i = 0; i < cs.size(); ++i)
    for (std::size_t j = i + 1; j < cs.size(); ++j) {
      const double d = distance(cs[i], cs[j]);
      if (d > 0.0) closest = std::min(closest, d);
    }
  if (!std::isfinite(closest))
    throw ConfigError("cannot resolve theta: all points sit on coincident centroids");
  return closest / 2.0;
}

Taxonomy Taxonomy::fit(TaxonomyConfig config,
                       std::span<const LabeledEmbedding> proper_training) {
  config.validate();
  Taxonomy taxonomy(config);
  if (uses_index(config.kind)) {
    for (const LabeledEmbedding& p : proper_training)
      if (p.label >= config.class_count)
        throw ConfigError("training label " + std::to_string(p.label) + " exceeds class count");
    taxonomy.index_ = std::make_shared<const KdIndex>(proper_training);
    if (config.k > taxonomy.index_->size())
      throw ConfigError("k = " + std::to_string(config.k) + " exceeds the " +
                        std::to_string(taxonomy.index_->size()) + " proper-training points");
  } else if (uses_centroids(config.kind)) {
    taxonomy.centroids_ = build_centroids(proper_training, config.class_count);
    if (config.kind == TaxonomyKind::NcV2 && !config.theta)
      taxonomy.config_.theta = resolve_theta(*taxonomy.centroids_, proper_training);
  }
  return taxonomy;
}

Assignment Taxonomy::assign(const TaxonomyInput& input) const {
  switch (config_.kind) {
    case TaxonomyKind::KnnV1:
      return {assign_knn_v1(*index_, input.embedding, config_), false};
    case TaxonomyKind::KnnV2:
      return knn_v2_assignment(*index_, input.embedding, config_);
    case TaxonomyKind::NcV1:
      return {assign_nc_v1(*centroids_, input.embedding, config_), false};
    case TaxonomyKind::NcV2:
      return {assign_nc_v2(*centroids_, input.embedding, config_), false};
    default:
      if (input.softmax.empty())
        throw ConfigError(to_string(config_.kind) + " needs softmax outputs for every example");
      return {assign_baseline(input.softmax, config_), false};
  }
}

}  // namespace ivp
