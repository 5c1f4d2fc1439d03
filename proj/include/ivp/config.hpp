#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "ivp/dataset.hpp"
#include "ivp/mlp.hpp"
#include "ivp/taxonomy.hpp"

namespace ivp {

enum class EmbeddingSource {
  Identity,  // raw features are the embedding
  Siamese,   // train a twin network on proper training
  Model,     // load a saved embedding network
};

enum class SoftmaxSource {
  Columns,     // s0..s{c-1} columns of the input file
  Classifier,  // train a softmax classifier on proper training
};

struct RunConfig {
  std::string input;
  std::string output_dir;

  // class_count is filled in from the data at run time.
  TaxonomyConfig taxonomy;

  EmbeddingSource embedding = EmbeddingSource::Siamese;
  std::string model_path;
  std::vector<std::size_t> hidden_dims = {10};
  std::size_t embedding_dim = 32;
  mlp::TrainConfig train;

  SoftmaxSource softmax = SoftmaxSource::Columns;
  std::vector<std::size_t> classifier_hidden_dims = {10};

  double test_fraction = 0.10;
  double calibration_fraction = 0.20;
  std::size_t bins = 10;

  // Drives the split, network initialisation and pair sampling.
  std::uint64_t seed = 42;

  SplitSpec split_spec() const { return {test_fraction, calibration_fraction, seed}; }
  mlp::TrainConfig train_config() const;

  // Full layer list for a given input width.
  std::vector<std::size_t> embedding_dims(std::size_t feature_dim) const;
  std::vector<std::size_t> classifier_dims(std::size_t feature_dim, std::size_t class_count) const;

  void validate() const;
};

// Keys accepted by apply_setting, in the order write_run_config emits them.
const std::vector<std::string>& run_config_keys();

// Throws ConfigError on an unknown key or a bad value.
void apply_setting(RunConfig& config, std::string_view key, std::string_view value);

// `key = value` lines; '#' starts a comment; blank lines are ignored.
RunConfig read_run_config(std::istream& in, const std::string& source, RunConfig base = {});
RunConfig load_run_config(const std::string& path, RunConfig base = {});
void write_run_config(const RunConfig& config, std::ostream& out);

}  // namespace ivp
