#include "ivp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "ivp/error.hpp"
#include "ivp/numeric.hpp"

namespace ivp {

namespace {

void require_records(std::span<const EvalRecord> records) {
  if (records.empty()) throw ConfigError("metrics need at least one record");
}

double true_class_mean(const EvalRecord& r) {
  if (r.true_label >= r.prediction.intervals.size())
    throw ConfigError("true label " + std::to_string(r.true_label) + " outside the prediction's classes");
  return r.prediction.intervals[r.true_label].mean();
}

}  // namespace

CumulativeCurves cumulative(std::span<const EvalRecord> records) {
  require_records(records);
  CumulativeCurves curves;
  curves.errors.reserve(records.size());
  curves.lower_error.reserve(records.size());
  curves.upper_error.reserve(records.size());
  double errors = 0.0, lower = 0.0, upper = 0.0;
  for (const EvalRecord& r : records) {
    const ProbabilityInterval& iv = r.prediction.predicted_interval();
    errors += r.error() ? 1.0 : 0.0;
    lower += 1.0 - iv.upper;
    upper += 1.0 - iv.lower;
    curves.errors.push_back(errors);
    curves.lower_error.push_back(lower);
    curves.upper_error.push_back(upper);
  }
  return curves;
}

double accuracy(std::span<const EvalRecord> records) {
  require_records(records);
  const auto errors = std::count_if(records.begin(), records.end(),
                                    [](const EvalRecord& r) { return r.error(); });
  return 1.0 - static_cast<double>(errors) / static_cast<double>(records.size());
}

double nll(std::span<const EvalRecord> records) {
  require_records(records);
  std::vector<double> terms;
  terms.reserve(records.size());
  for (const EvalRecord& r : records)
    terms.push_back(-std::log(std::max(true_class_mean(r), kProbabilityFloor)));
  return pairwise_sum(terms);
}

double brier(std::span<const EvalRecord> records) {
  require_records(records);
  std::vector<double> terms;
  terms.reserve(records.size());
  for (const EvalRecord& r : records) {
    true_class_mean(r);
    double sum = 0.0;
    for (ClassIndex j = 0; j < r.prediction.intervals.size(); ++j) {
      const double target = j == r.true_label ? 1.0 : 0.0;
      const double diff = r.prediction.intervals[j].mean() - target;
      sum += diff * diff;
    }
    terms.push_back(sum);
  }
  return pairwise_sum(terms) / static_cast<double>(records.size());
}

double diameter(std::span<const EvalRecord> records) {
  require_records(records);
  std::vector<double> widths;
  widths.reserve(records.size());
  for (const EvalRecord& r : records) widths.push_back(r.prediction.predicted_interval().width());
  return pairwise_sum(widths) / static_cast<double>(records.size());
}

BinnedCalibration ece_mce(std::span<const EvalRecord> records, std::size_t bin_count) {
  require_records(records);
  if (bin_count == 0) throw ConfigError("bin count must be at least 1");
  std::vector<std::vector<double>> confidences(bin_count), hits(bin_count);
  for (const EvalRecord& r : records) {
    const double conf = r.prediction.predicted_interval().mean();
    const double scaled = std::ceil(conf * static_cast<double>(bin_count));
    const auto bin = static_cast<std::size_t>(
        std::clamp(scaled - 1.0, 0.0, static_cast<double>(bin_count - 1)));
    confidences[bin].push_back(conf);
    hits[bin].push_back(r.error() ? 0.0 : 1.0);
  }
  BinnedCalibration result;
  result.bins.resize(bin_count);
  std::vector<double> weighted_gaps;
  const double n = static_cast<double>(records.size());
  for (std::size_t m = 0; m < bin_count; ++m) {
    CalibrationBin& bin = result.bins[m];
    bin.count = confidences[m].size();
    if (bin.count == 0) continue;
    const double size = static_cast<double>(bin.count);
    bin.accuracy = pairwise_sum(hits[m]) / size;
    bin.confidence = pairwise_sum(confidences[m]) / size;
    const double gap = std::abs(bin.accuracy - bin.confidence);
    weighted_gaps.push_back(size / n * gap);
    result.mce = std::max(result.mce, gap);
  }
  result.ece = pairwise_sum(weighted_gaps);
  return result;
}

CalibrationReport evaluate(std::span<const EvalRecord> records, std::size_t bin_count) {
  require_records(records);
  CalibrationReport report;
  report.n = records.size();
  report.class_count = records.front().prediction.intervals.size();
  report.curves = cumulative(records);
  report.accuracy = 1.0 - report.curves.errors.back() / static_cast<double>(report.n);
  report.nll = nll(records);
  report.nll_mean = report.nll / static_cast<double>(report.n);
  report.brier = brier(records);
  report.diameter = diameter(records);
  BinnedCalibration binned = ece_mce(records, bin_count);
  report.ece = binned.ece;
  report.mce = binned.mce;
  report.bins = std::move(binned.bins);
  for (const EvalRecord& r : records) {
    report.uninformative += r.prediction.uninformative;
    report.clamped += r.prediction.clamped;
  }
  return report;
}

void write_report(const CalibrationReport& report, std::ostream& out) {
  out << "n " << report.n << '\n';
  out << "classes " << report.class_count << '\n';
  out << "accuracy " << format_double(report.accuracy) << '\n';
  out << "nll " << format_double(report.nll) << '\n';
  out << "nll_mean " << format_double(report.nll_mean) << '\n';
  out << "brier " << format_double(report.brier) << '\n';
  out << "diameter " << format_double(report.diameter) << '\n';
  out << "ece " << format_double(report.ece) << '\n';
  out << "mce " << format_double(report.mce) << '\n';
  out << "errors " << format_double(report.curves.errors.back()) << '\n';
  out << "lower_error_probability " << format_double(report.curves.lower_error.back()) << '\n';
  out << "upper_error_probability " << format_double(report.curves.upper_error.back()) << '\n';
  out << "uninformative " << report.uninformative << '\n';
  out << "clamped " << report.clamped << '\n';
  out << "bins " << report.bins.size() << '\n';
  for (std::size_t m = 0; m < report.bins.size(); ++m) {
    const CalibrationBin& b = report.bins[m];
    out << "bin " << m << ' ' << b.count << ' ' << format_double(b.accuracy) << ' '
        << format_double(b.confidence) << '\n';
  }
}

void write_curves(const CumulativeCurves& curves, std::ostream& out) {
  out << "n,E_n,LEP_n,UEP_n\n";
  for (std::size_t i = 0; i < curves.errors.size(); ++i)
    out << i + 1 << ',' << format_double(curves.errors[i]) << ','
        << format_double(curves.lower_error[i]) << ',' << format_double(curves.upper_error[i])
        << '\n';
}

}  // namespace ivp
