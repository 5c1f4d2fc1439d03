#pragma once

// Fully connected network used twice with shared weights (siamese) to learn
// an embedding under contrastive loss, or once with a softmax head to supply
// class probabilities for the softmax-based taxonomies.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "ivp/types.hpp"

namespace ivp::mlp {

enum class Mode { Embedding, Classifier };

const char* to_string(Mode mode);

// One affine map; weights are row-major, `outputs` rows by `inputs` columns.
struct Layer {
  std::size_t inputs = 0;
  std::size_t outputs = 0;
  std::vector<double> weights;
  std::vector<double> bias;

  double& weight(std::size_t row, std::size_t col) { return weights[row * inputs + col]; }
  double weight(std::size_t row, std::size_t col) const { return weights[row * inputs + col]; }

  bool operator==(const Layer&) const = default;
};

// Hidden layers use tanh. The output layer is linear in embedding mode and
// softmax in classifier mode.
struct MlpParams {
  std::vector<std::size_t> dims;
  Mode mode = Mode::Embedding;
  std::vector<Layer> layers;

  std::size_t input_dim() const { return dims.front(); }
  std::size_t output_dim() const { return dims.back(); }

  // Throws ShapeError on inconsistent shapes, ConfigError on non-finite values.
  void validate() const;

  bool operator==(const MlpParams&) const = default;
};

// Same layout as the parameters they differentiate.
using Gradient = std::vector<Layer>;

MlpParams zero_params(std::span<const std::size_t> dims, Mode mode);

// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] for weights and biases.
MlpParams init_params(std::span<const std::size_t> dims, Mode mode, std::uint64_t seed);

std::vector<double> forward(const MlpParams& params, std::span<const double> x);

struct PairExample {
  std::vector<double> x1;
  std::vector<double> x2;
  bool same_class = false;
};

struct TrainConfig {
  double margin = 1.0;
  double learning_rate = 0.01;
  std::size_t epochs = 50;
  std::size_t batch_size = 32;
  std::uint64_t seed = 42;
  // Siamese mode only; the classifier makes one shuffled pass per epoch.
  std::size_t pairs_per_epoch = 2000;

  void validate() const;
};

// Similar pairs cost d(r1, r2); dissimilar pairs cost max(0, m - d).
// d is the plain (not squared) Euclidean distance.
double contrastive_loss(std::span<const double> r1, std::span<const double> r2, bool same_class,
                        double margin);

double pair_loss(const MlpParams& params, const PairExample& pair, double margin);
double mean_pair_loss(const MlpParams& params, std::span<const PairExample> pairs, double margin);

// Gradient of pair_loss with respect to every parameter, backpropagated
// through both copies of the network. At d = 0 the distance is not
// differentiable; the zero subgradient is used there.
Gradient loss_gradient(const MlpParams& params, const PairExample& pair, double margin);

// Classifier mode: -log softmax(x)[label].
double cross_entropy(const MlpParams& params, std::span<const double> x, ClassIndex label);
double mean_cross_entropy(const MlpParams& params, std::span<const LabeledExample> data);
Gradient cross_entropy_gradient(const MlpParams& params, std::span<const double> x,
                                ClassIndex label);

// Half same-class and half different-class pairs, drawn uniformly within
// each constraint. Requires at least two classes.
std::vector<PairExample> sample_pairs(std::span<const LabeledExample> data, std::size_t count,
                                      std::uint64_t seed);

MlpParams train_siamese(std::span<const LabeledExample> data, std::span<const std::size_t> dims,
                        const TrainConfig& config);

MlpParams train_classifier(std::span<const LabeledExample> data,
                           std::span<const std::size_t> dims, const TrainConfig& config);

void save(const MlpParams& params, std::ostream& out);
MlpParams load(std::istream& in);

void save_file(const MlpParams& params, const std::string& path);
MlpParams load_file(const std::string& path);

}  // namespace ivp::mlp
