#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ivp/config.hpp"
#include "ivp/dataset.hpp"
#include "ivp/metrics.hpp"
#include "ivp/mlp.hpp"
#include "ivp/venn.hpp"

namespace ivp {

// Maps raw features to the embedding space: a trained network, or the
// identity when no network is set.
class Embedder {
 public:
  Embedder() = default;
  explicit Embedder(mlp::MlpParams network);

  bool is_identity() const { return !network_; }
  const mlp::MlpParams* network() const { return network_ ? &*network_ : nullptr; }

  Embedding embed(std::span<const double> features) const;

 private:
  std::optional<mlp::MlpParams> network_;
};

std::vector<LabeledEmbedding> embed_rows(const Dataset& data, std::span<const std::size_t> rows,
                                         const Embedder& embedder);

// Replaces the feature columns with embeddings; ids, labels and softmax are kept.
Dataset embed_dataset(const Dataset& data, const Embedder& embedder);

// Replaces (or adds) the softmax block with a classifier's outputs.
Dataset attach_softmax(const Dataset& data, const mlp::MlpParams& classifier);

struct PredictionRow {
  std::string id;
  EvalRecord record;
};

// CSV: id,label,category,total,clamped,j_best,L0,U0,...,L{c-1},U{c-1}
void write_predictions(std::span<const PredictionRow> rows, std::size_t class_count,
                       std::ostream& out);
std::vector<PredictionRow> read_predictions(std::istream& in, const std::string& source);

std::vector<PredictionRow> predict_rows(const CalibrationTable& table, const Taxonomy& taxonomy,
                                        const Dataset& data, std::span<const std::size_t> rows,
                                        const Embedder& embedder);

struct PipelineResult {
  RunConfig config;  // with class count and theta resolved
  Split split;
  std::optional<mlp::MlpParams> embedding_network;
  std::optional<mlp::MlpParams> classifier;
  CalibrationTable table;
  std::size_t calibration_clamped = 0;
  std::vector<PredictionRow> predictions;
  CalibrationReport report;
  // Mean wall time per test example for embedding + assignment + intervals.
  double latency_ms = 0.0;
};

// Split, train or load the embedding, calibrate, predict the test part and
// evaluate. When output_dir is set, writes config.txt, table.txt,
// predictions.csv, report.txt, curves.csv, timing.txt and any trained
// networks. Failures are rethrown as StageError naming the stage.
PipelineResult run_pipeline(const RunConfig& config, const Dataset& data);
PipelineResult run_pipeline(const RunConfig& config);

}  // namespace ivp
