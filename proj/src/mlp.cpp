#include "ivp/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>

#include "ivp/error.hpp"
#include "ivp/numeric.hpp"
#include "ivp/random.hpp"

namespace ivp::mlp {

const char* to_string(Mode mode) {
  return mode == Mode::Embedding ? "embedding" : "classifier";
}

void MlpParams::validate() const {
  if (dims.size() < 2) throw ShapeError("network needs at least input and output dims");
  if (layers.size() != dims.size() - 1)
    throw ShapeError("expected " + std::to_string(dims.size() - 1) + " layers, got " +
                     std::to_string(layers.size()));
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const Layer& layer = layers[l];
    if (dims[l] == 0 || dims[l + 1] == 0) throw ShapeError("layer dims must be positive");
    if (layer.inputs != dims[l] || layer.outputs != dims[l + 1] ||
        layer.weights.size() != layer.inputs * layer.outputs ||
        layer.bias.size() != layer.outputs)
      throw ShapeError("layer " + std::to_string(l) + " does not map " + std::to_string(dims[l]) +
                       " -> " + std::to_string(dims[l + 1]));
    auto finite = [](double v) { return std::isfinite(v); };
    if (!std::all_of(layer.weights.begin(), layer.weights.end(), finite) ||
        !std::all_of(layer.bias.begin(), layer.bias.end(), finite))
      throw ConfigError("layer " + std::to_string(l) + " has non-finite parameters");
  }
  if (mode == Mode::Classifier && output_dim() < 2)
    throw ShapeError("classifier needs at least two outputs");
}

MlpParams zero_params(std::span<const std::size_t> dims, Mode mode) {
  if (dims.size() < 2) throw ShapeError("network needs at least input and output dims");
  MlpParams params;
  params.dims.assign(dims.begin(), dims.end());
  params.mode = mode;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    if (dims[l] == 0 || dims[l + 1] == 0) throw ShapeError("layer dims must be positive");
    Layer layer;
    layer.inputs = dims[l];
    layer.outputs = dims[l + 1];
    layer.weights.assign(layer.inputs * layer.outputs, 0.0);
    layer.bias.assign(layer.outputs, 0.0);
    params.layers.push_back(std::move(layer));
  }
  return params;
}

MlpParams init_params(std::span<const std::size_t> dims, Mode mode, std::uint64_t seed) {
  MlpParams params = zero_params(dims, mode);
  Rng rng(seed);
  for (Layer& layer : params.layers) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(layer.inputs));
    for (double& w : layer.weights) w = rng.uniform(-scale, scale);
    for (double& b : layer.bias) b = rng.uniform(-scale, scale);
  }
  return params;
}

namespace {

void check_input(const MlpParams& params, std::span<const double> x) {
  if (params.dims.empty() || x.size() != params.input_dim())
    throw ShapeError("input has dimension " + std::to_string(x.size()) + ", network expects " +
                     std::to_string(params.dims.empty() ? 0 : params.input_dim()));
}

void softmax_in_place(std::vector<double>& z) {
  const double top = *std::max_element(z.begin(), z.end());
  double total = 0.0;
  for (double& v : z) {
    v = std::exp(v - top);
    total += v;
  }
  for (double& v : z) v /= total;
}

// activations[0] is the input; activations[l + 1] is the output of layer l
// after its nonlinearity (softmax included in classifier mode).
std::vector<std::vector<double>> forward_trace(const MlpParams& params,
                                               std::span<const double> x) {
  check_input(params, x);
  std::vector<std::vector<double>> activations;
  activations.reserve(params.layers.size() + 1);
  activations.emplace_back(x.begin(), x.end());
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const Layer& layer = params.layers[l];
    const std::vector<double>& in = activations.back();
    std::vector<double> out(layer.bias);
    for (std::size_t row = 0; row < layer.outputs; ++row) {
      const double* w = &layer.weights[row * layer.inputs];
      double acc = 0.0;
      for (std::size_t col = 0; col < layer.inputs; ++col) acc += w[col] * in[col];
      out[row] += acc;
    }
    const bool last = l + 1 == params.layers.size();
    if (!last) {
      for (double& v : out) v = std::tanh(v);
    } else if (params.mode == Mode::Classifier) {
      softmax_in_place(out);
    }
    activations.push_back(std::move(out));
  }
  return activations;
}

Gradient zero_gradient(const MlpParams& params) {
  Gradient grad;
  grad.reserve(params.layers.size());
  for (const Layer& layer : params.layers) {
    Layer g;
    g.inputs = layer.inputs;
    g.outputs = layer.outputs;
    g.weights.assign(layer.weights.size(), 0.0);
    g.bias.assign(layer.bias.size(), 0.0);
    grad.push_back(std::move(g));
  }
  return grad;
}

// Accumulates into `grad` given dLoss/d(pre-activation of the last layer).
void backpropagate(const MlpParams& params, const std::vector<std::vector<double>>& activations,
                   std::vector<double> delta, Gradient& grad) {
  for (std::size_t l = params.layers.size(); l-- > 0;) {
    const Layer& layer = params.layers[l];
    const std::vector<double>& in = activations[l];
    Layer& g = grad[l];
    for (std::size_t row = 0; row < layer.outputs; ++row) {
      g.bias[row] += delta[row];
      double* gw = &g.weights[row * layer.inputs];
      for (std::size_t col = 0; col < layer.inputs; ++col) gw[col] += delta[row] * in[col];
    }
    if (l == 0) break;
    std::vector<double> prev(layer.inputs, 0.0);
    for (std::size_t row = 0; row < layer.outputs; ++row) {
      const double* w = &layer.weights[row * layer.inputs];
      for (std::size_t col = 0; col < layer.inputs; ++col) prev[col] += w[col] * delta[row];
    }
    // tanh'(z) = 1 - tanh(z)^2, and `in` holds tanh(z) for hidden layers.
    for (std::size_t col = 0; col < layer.inputs; ++col) prev[col] *= 1.0 - in[col] * in[col];
    delta = std::move(prev);
  }
}

void check_pair_dims(std::span<const double> r1, std::span<const double> r2) {
  if (r1.size() != r2.size())
    throw ShapeError("embedding dimensions differ: " + std::to_string(r1.size()) + " vs " +
                     std::to_string(r2.size()));
}

double euclidean(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    sum += diff * diff;
  }
  return std::sqrt(sum);
}

void scale_add(Gradient& into, const Gradient& from, double factor) {
  for (std::size_t l = 0; l < into.size(); ++l) {
    for (std::size_t i = 0; i < into[l].weights.size(); ++i)
      into[l].weights[i] += factor * from[l].weights[i];
    for (std::size_t i = 0; i < into[l].bias.size(); ++i)
      into[l].bias[i] += factor * from[l].bias[i];
  }
}

void apply_step(MlpParams& params, const Gradient& grad, double step) {
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    Layer& layer = params.layers[l];
    for (std::size_t i = 0; i < layer.weights.size(); ++i)
      layer.weights[i] -= step * grad[l].weights[i];
    for (std::size_t i = 0; i < layer.bias.size(); ++i) layer.bias[i] -= step * grad[l].bias[i];
  }
}

// Accumulating variant used during training to avoid reallocating.
void accumulate_pair_gradient(const MlpParams& params, const PairExample& pair, double margin,
                              Gradient& grad) {
  const auto trace1 = forward_trace(params, pair.x1);
  const auto trace2 = forward_trace(params, pair.x2);
  const std::vector<double>& r1 = trace1.back();
  const std::vector<double>& r2 = trace2.back();
  const double d = euclidean(r1, r2);
  double coeff = 0.0;  // dL/dd
  if (pair.same_class) {
    coeff = 1.0;
  } else if (d < margin) {
    coeff = -1.0;
  }
  if (coeff == 0.0 || d == 0.0) return;
  std::vector<double> delta1(r1.size()), delta2(r1.size());
  for (std::size_t i = 0; i < r1.size(); ++i) {
    delta1[i] = coeff * (r1[i] - r2[i]) / d;
    delta2[i] = -delta1[i];
  }
  backpropagate(params, trace1, std::move(delta1), grad);
  backpropagate(params, trace2, std::move(delta2), grad);
}

void check_training_data(std::span<const LabeledExample> data, std::span<const std::size_t> dims) {
  if (dims.size() < 2) throw ShapeError("network needs at least input and output dims");
  if (data.empty()) throw ConfigError("training data is empty");
  for (std::size_t i = 0; i < data.size(); ++i)
    if (data[i].features.size() != dims[0])
      throw ShapeError("training example " + std::to_string(i) + " has dimension " +
                       std::to_string(data[i].features.size()) + ", network expects " +
                       std::to_string(dims[0]));
}

}  // namespace

std::vector<double> forward(const MlpParams& params, std::span<const double> x) {
  return std::move(forward_trace(params, x).back());
}

void TrainConfig::validate() const {
  if (!(margin > 0.0) || !std::isfinite(margin)) throw ConfigError("margin must be positive");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw ConfigError("learning rate must be positive");
  if (batch_size == 0) throw ConfigError("batch size must be positive");
  if (pairs_per_epoch == 0) throw ConfigError("pairs per epoch must be positive");
}

double contrastive_loss(std::span<const double> r1, std::span<const double> r2, bool same_class,
                        double margin) {
  check_pair_dims(r1, r2);
  if (!(margin > 0.0)) throw ConfigError("margin must be positive");
  const double d = euclidean(r1, r2);
  return same_class ? d : std::max(0.0, margin - d);
}

double pair_loss(const MlpParams& params, const PairExample& pair, double margin) {
  const auto r1 = forward(params, pair.x1);
  const auto r2 = forward(params, pair.x2);
  return contrastive_loss(r1, r2, pair.same_class, margin);
}

double mean_pair_loss(const MlpParams& params, std::span<const PairExample> pairs, double margin) {
  if (pairs.empty()) return 0.0;
  std::vector<double> losses;
  losses.reserve(pairs.size());
  for (const PairExample& pair : pairs) losses.push_back(pair_loss(params, pair, margin));
  return pairwise_sum(losses) / static_cast<double>(pairs.size());
}

Gradient loss_gradient(const MlpParams& params, const PairExample& pair, double margin) {
  if (pair.x1.size() != pair.x2.size())
    throw ShapeError("pair members have different dimensions");
  if (!(margin > 0.0)) throw ConfigError("margin must be positive");
  Gradient grad = zero_gradient(params);
  accumulate_pair_gradient(params, pair, margin, grad);
  return grad;
}

double cross_entropy(const MlpParams& params, std::span<const double> x, ClassIndex label) {
  if (params.mode != Mode::Classifier) throw ConfigError("cross entropy needs a classifier");
  const auto probs = forward(params, x);
  if (label >= probs.size()) throw ShapeError("label out of range for classifier outputs");
  return -std::log(std::max(probs[label], 1e-300));
}

double mean_cross_entropy(const MlpParams& params, std::span<const LabeledExample> data) {
  if (data.empty()) return 0.0;
  std::vector<double> losses;
  losses.reserve(data.size());
  for (const LabeledExample& ex : data) losses.push_back(cross_entropy(params, ex.features, ex.label));
  return pairwise_sum(losses) / static_cast<double>(data.size());
}

Gradient cross_entropy_gradient(const MlpParams& params, std::span<const double> x,
                                ClassIndex label) {
  if (params.mode != Mode::Classifier) throw ConfigError("cross entropy needs a classifier");
  const auto trace = forward_trace(params, x);
  std::vector<double> delta = trace.back();
  if (label >= delta.size()) throw ShapeError("label out of range for classifier outputs");
  delta[label] -= 1.0;
  Gradient grad = zero_gradient(params);
  backpropagate(params, trace, std::move(delta), grad);
  return grad;
}

std::vector<PairExample> sample_pairs(std::span<const LabeledExample> data, std::size_t count,
                                      std::uint64_t seed) {
  std::map<ClassIndex, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < data.size(); ++i) by_class[data[i].label].push_back(i);
  if (by_class.size() < 2)
    throw ConfigError("contrastive training needs at least two classes to form dissimilar pairs");

  Rng rng(seed);
  std::vector<PairExample> pairs;
  pairs.reserve(count);
  for (std::size_t p = 0; p < count; ++p) {
    const std::size_t anchor = rng.below(data.size());
    const ClassIndex label = data[anchor].label;
    const bool same = p % 2 == 0;
    std::size_t partner = anchor;
    if (same) {
      const auto& members = by_class[label];
      if (members.size() > 1) {
        do {
          partner = members[rng.below(members.size())];
        } while (partner == anchor);
      }
    } else {
      do {
        partner = rng.below(data.size());
      } while (data[partner].label == label);
    }
    pairs.push_back({data[anchor].features, data[partner].features, same});
  }
  return pairs;
}

MlpParams train_siamese(std::span<const LabeledExample> data, std::span<const std::size_t> dims,
                        const TrainConfig& config) {
  config.validate();
  check_training_data(data, dims);
  MlpParams params = init_params(dims, Mode::Embedding, config.seed);
  // Separate streams for initialisation and for each epoch's pairs.
  Rng epoch_seeds(config.seed ^ 0x9e3779b97f4a7c15ULL);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const auto pairs = sample_pairs(data, config.pairs_per_epoch, epoch_seeds.next_u64());
    for (std::size_t start = 0; start < pairs.size(); start += config.batch_size) {
      const std::size_t end = std::min(pairs.size(), start + config.batch_size);
      Gradient grad = zero_gradient(params);
      for (std::size_t i = start; i < end; ++i)
        accumulate_pair_gradient(params, pairs[i], config.margin, grad);
      apply_step(params, grad, config.learning_rate / static_cast<double>(end - start));
    }
  }
  return params;
}

MlpParams train_classifier(std::span<const LabeledExample> data,
                           std::span<const std::size_t> dims, const TrainConfig& config) {
  config.validate();
  check_training_data(data, dims);
  std::size_t classes = 0;
  for (const LabeledExample& ex : data) classes = std::max(classes, ex.label + 1);
  if (dims.back() < classes)
    throw ShapeError("classifier has " + std::to_string(dims.back()) + " outputs but data has " +
                     std::to_string(classes) + " classes");
  {
    std::vector<bool> seen(classes, false);
    std::size_t distinct = 0;
    for (const LabeledExample& ex : data)
      if (!seen[ex.label]) seen[ex.label] = true, ++distinct;
    if (distinct < 2) throw ConfigError("classifier training needs at least two classes");
  }

  MlpParams params = init_params(dims, Mode::Classifier, config.seed);
  Rng rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(std::span(order));
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      Gradient grad = zero_gradient(params);
      for (std::size_t i = start; i < end; ++i) {
        const LabeledExample& ex = data[order[i]];
        scale_add(grad, cross_entropy_gradient(params, ex.features, ex.label), 1.0);
      }
      apply_step(params, grad, config.learning_rate / static_cast<double>(end - start));
    }
  }
  return params;
}

// Text format, version 1:
//   ivp-mlp 1
//   mode <embedding|classifier>
//   dims <count> <d0> <d1> ...
//   layer <index> <outputs> <inputs>
//   weights <row-major values>
//   bias <values>
//   end
void save(const MlpParams& params, std::ostream& out) {
  params.validate();
  out << "ivp-mlp 1\n";
  out << "mode " << to_string(params.mode) << '\n';
  out << "dims " << params.dims.size();
  for (std::size_t d : params.dims) out << ' ' << d;
  out << '\n';
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const Layer& layer = params.layers[l];
    out << "layer " << l << ' ' << layer.outputs << ' ' << layer.inputs << '\n';
    out << "weights";
    for (double w : layer.weights) out << ' ' << format_double(w);
    out << "\nbias";
    for (double b : layer.bias) out << ' ' << format_double(b);
    out << '\n';
  }
  out << "end\n";
}

namespace {

class TokenReader {
 public:
  explicit TokenReader(std::istream& in) : in_(in) {}

  std::string word() {
    std::string token;
    if (!(in_ >> token)) throw ParseError("model", 0, "unexpected end of model file");
    return token;
  }

  void expect(const std::string& keyword) {
    const std::string token = word();
    if (token != keyword) throw ParseError("model", 0, "expected '" + keyword + "', got '" + token + "'");
  }

  std::size_t count() {
    const std::string token = word();
    const auto value = parse_integer(token);
    if (!value || *value < 0) throw ParseError("model", 0, "expected a count, got '" + token + "'");
    return static_cast<std::size_t>(*value);
  }

  double real() {
    const std::string token = word();
    const auto value = parse_double(token);
    if (!value) throw ParseError("model", 0, "expected a number, got '" + token + "'");
    return *value;
  }

 private:
  std::istream& in_;
};

}  // namespace

MlpParams load(std::istream& in) {
  TokenReader reader(in);
  reader.expect("ivp-mlp");
  if (reader.count() != 1) throw ParseError("model", 0, "unsupported model version");
  MlpParams params;
  reader.expect("mode");
  const std::string mode = reader.word();
  if (mode == "embedding") {
    params.mode = Mode::Embedding;
  } else if (mode == "classifier") {
    params.mode = Mode::Classifier;
  } else {
    throw ParseError("model", 0, "unknown mode '" + mode + "'");
  }
  reader.expect("dims");
  const std::size_t depth = reader.count();
  if (depth < 2) throw ParseError("model", 0, "network needs at least two dims");
  for (std::size_t i = 0; i < depth; ++i) params.dims.push_back(reader.count());
  for (std::size_t l = 0; l + 1 < depth; ++l) {
    reader.expect("layer");
    if (reader.count() != l) throw ParseError("model", 0, "layers out of order");
    Layer layer;
    layer.outputs = reader.count();
    layer.inputs = reader.count();
    reader.expect("weights");
    layer.weights.resize(layer.outputs * layer.inputs);
    for (double& w : layer.weights) w = reader.real();
    reader.expect("bias");
    layer.bias.resize(layer.outputs);
    for (double& b : layer.bias) b = reader.real();
    params.layers.push_back(std::move(layer));
  }
  reader.expect("end");
  params.validate();
  return params;
}

void save_file(const MlpParams& params, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write model file " + path);
  save(params, out);
  if (!out) throw Error("failed writing model file " + path);
}

MlpParams load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open model file " + path);
  return load(in);
}

}  // namespace ivp::mlp
