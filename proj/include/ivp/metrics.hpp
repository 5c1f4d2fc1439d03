#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "ivp/venn.hpp"

namespace ivp {

struct EvalRecord {
  IvpPrediction prediction;
  ClassIndex true_label = 0;

  bool error() const { return prediction.predicted_class != true_label; }
};

// Running sums in record order: errors E_n, and the lower/upper error
// probabilities 1 - U(y_hat) and 1 - L(y_hat).
struct CumulativeCurves {
  std::vector<double> errors;
  std::vector<double> lower_error;
  std::vector<double> upper_error;
};

struct CalibrationBin {
  std::size_t count = 0;
  double accuracy = 0.0;
  double confidence = 0.0;
};

struct BinnedCalibration {
  double ece = 0.0;
  double mce = 0.0;
  std::vector<CalibrationBin> bins;
};

struct CalibrationReport {
  std::size_t n = 0;
  std::size_t class_count = 0;
  double accuracy = 0.0;
  double nll = 0.0;  // summed over records
  double nll_mean = 0.0;
  double brier = 0.0;
  double diameter = 0.0;
  double ece = 0.0;
  double mce = 0.0;
  std::size_t uninformative = 0;
  std::size_t clamped = 0;
  CumulativeCurves curves;
  std::vector<CalibrationBin> bins;
};

inline constexpr double kProbabilityFloor = 1e-12;
inline constexpr std::size_t kDefaultBins = 10;

CumulativeCurves cumulative(std::span<const EvalRecord> records);

double accuracy(std::span<const EvalRecord> records);

// Sum of -log of the mean probability given to the true class, floored at
// kProbabilityFloor.
double nll(std::span<const EvalRecord> records);

double brier(std::span<const EvalRecord> records);

// Mean of U(y_hat) - L(y_hat).
double diameter(std::span<const EvalRecord> records);

// Equal-width bins over [0, 1], each closed on the right; confidence 0 falls
// in the first bin. Confidence is the predicted class's interval mean.
// Empty bins contribute to neither ECE nor MCE.
BinnedCalibration ece_mce(std::span<const EvalRecord> records, std::size_t bin_count = kDefaultBins);

CalibrationReport evaluate(std::span<const EvalRecord> records, std::size_t bin_count = kDefaultBins);

// One `key value` line per scalar, then one line per bin.
void write_report(const CalibrationReport& report, std::ostream& out);
// CSV with header n,E_n,LEP_n,UEP_n.
void write_curves(const CumulativeCurves& curves, std::ostream& out);

}  // namespace ivp
