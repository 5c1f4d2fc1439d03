#pragma once

// Inductive Venn prediction: calibration examples are counted per taxonomy
// category once, offline. A new example's category counts then give a
// probability interval for every class.

#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "ivp/taxonomy.hpp"

namespace ivp {

// [n_j / (N + 1), (n_j + 1) / (N + 1)] where n_j counts class j in the
// category and N counts the whole category. `hits` and `total` keep the
// exact rational form; `lower` and `upper` are the rounded values.
struct ProbabilityInterval {
  std::size_t hits = 0;
  std::size_t total = 0;
  double lower = 0.0;
  double upper = 1.0;

  double mean() const { return 0.5 * (lower + upper); }
  double width() const { return upper - lower; }

  bool operator==(const ProbabilityInterval&) const = default;
};

class CalibrationTable {
 public:
  CalibrationTable() = default;
  explicit CalibrationTable(TaxonomyConfig taxonomy);

  const TaxonomyConfig& taxonomy() const { return taxonomy_; }
  std::size_t class_count() const { return taxonomy_.class_count; }
  std::size_t category_count() const { return taxonomy_.category_count(); }

  void add(CategoryId category, ClassIndex label, std::size_t count = 1);

  // Per-class counts for the category; all zeros when it received nothing.
  std::vector<std::size_t> counts(CategoryId category) const;
  std::size_t total(CategoryId category) const;

  // Only categories that received at least one example.
  const std::map<std::size_t, std::vector<std::size_t>>& entries() const { return counts_; }

  // Split sizes recorded for provenance.
  std::size_t proper_training_size = 0;
  std::size_t calibration_size = 0;

  bool operator==(const CalibrationTable&) const = default;

 private:
  void check_category(CategoryId category) const;

  TaxonomyConfig taxonomy_;
  std::map<std::size_t, std::vector<std::size_t>> counts_;
  std::map<std::size_t, std::size_t> totals_;
};

struct LabeledInput {
  TaxonomyInput input;
  ClassIndex label = 0;
};

struct CalibrationSummary {
  std::size_t clamped = 0;
};

CalibrationTable calibrate(std::span<const LabeledInput> calibration_set, const Taxonomy& taxonomy,
                           CalibrationSummary* summary = nullptr);

std::vector<ProbabilityInterval> intervals(const CalibrationTable& table, CategoryId category);

struct IvpPrediction {
  CategoryId category;
  ClassIndex predicted_class = 0;  // argmax of interval means, lowest index on ties
  std::vector<ProbabilityInterval> intervals;
  // The category held no calibration examples, so every interval is [0, 1].
  bool uninformative = false;
  bool clamped = false;

  std::vector<double> means() const;
  const ProbabilityInterval& predicted_interval() const { return intervals[predicted_class]; }
};

IvpPrediction predict_category(const CalibrationTable& table, const Assignment& assignment);

// Throws ConfigError when the taxonomy configuration differs from the one the
// table was calibrated with, or the category falls outside the table.
IvpPrediction predict(const CalibrationTable& table, const Taxonomy& taxonomy,
                      const TaxonomyInput& input);

void save(const CalibrationTable& table, std::ostream& out);
CalibrationTable load_table(std::istream& in);

void save_file(const CalibrationTable& table, const std::string& path);
CalibrationTable load_table_file(const std::string& path);

}  // namespace ivp
