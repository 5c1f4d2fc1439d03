#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ivp/types.hpp"

namespace ivp {

struct Dataset {
  std::vector<LabeledExample> examples;
  std::vector<std::string> ids;
  // Either empty or one probability vector of length class_count per example.
  std::vector<std::vector<double>> softmax;
  std::size_t feature_dim = 0;
  std::size_t class_count = 0;

  std::size_t size() const { return examples.size(); }
  bool has_softmax() const { return !softmax.empty(); }

  Dataset subset(std::span<const std::size_t> rows) const;
};

// Header: id,label,f0,...,f{D-1}[,s0,...,s{c-1}]. The class count is taken
// from the softmax block when present, else from `class_count`, else from
// the largest label. Errors carry the offending line number.
Dataset read_csv(std::istream& in, const std::string& source,
                 std::optional<std::size_t> class_count = std::nullopt);
Dataset load_csv(const std::string& path, std::optional<std::size_t> class_count = std::nullopt);

void write_csv(const Dataset& data, std::ostream& out);
void write_csv_file(const Dataset& data, const std::string& path);

struct SplitSpec {
  double test_fraction = 0.10;
  double calibration_fraction = 0.20;  // of the non-test remainder
  std::uint64_t seed = 42;

  void validate() const;
};

struct Split {
  std::vector<std::size_t> proper_training;
  std::vector<std::size_t> calibration;
  std::vector<std::size_t> test;
};

// Seeded shuffle, then floor(n * test_fraction) test rows and
// floor(rest * calibration_fraction) calibration rows; the remainder is proper
// training. Throws ConfigError if a part is empty or a class is missing from
// proper training.
Split split(const Dataset& data, const SplitSpec& spec);

// `class_count` isotropic unit-variance Gaussians whose centres are pairwise
// `separation` apart: scaled unit vectors when dim >= class_count, otherwise
// evenly spaced along the first axis (adjacent centres `separation` apart).
// With `with_softmax`, each row carries the exact class posterior under
// equal priors.
Dataset synth_gaussians(std::size_t class_count, std::size_t dim, std::size_t n_per_class,
                        double separation, std::uint64_t seed, bool with_softmax = false);

std::vector<std::vector<double>> gaussian_centers(std::size_t class_count, std::size_t dim,
                                                  double separation);

}  // namespace ivp
