#include "ivp/venn.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "ivp/error.hpp"
#include "ivp/numeric.hpp"

namespace ivp {

CalibrationTable::CalibrationTable(TaxonomyConfig taxonomy) : taxonomy_(std::move(taxonomy)) {
  taxonomy_.validate();
}

void CalibrationTable::check_category(CategoryId category) const {
  if (category.value >= category_count())
    throw ConfigError("category " + std::to_string(category.value) + " is outside the " +
                      std::to_string(category_count()) + " categories of " +
                      to_string(taxonomy_.kind));
}

void CalibrationTable::add(CategoryId category, ClassIndex label, std::size_t count) {
  check_category(category);
  if (label >= class_count())
    throw ConfigError("calibration label " + std::to_string(label) + " exceeds class count " +
                      std::to_string(class_count()));
  auto [it, inserted] = counts_.try_emplace(category.value, class_count(), 0);
  it->second[label] += count;
  totals_[category.value] += count;
}

std::vector<std::size_t> CalibrationTable::counts(CategoryId category) const {
  check_category(category);
  const auto it = counts_.find(category.value);
  return it == counts_.end() ? std::vector<std::size_t>(class_count(), 0) : it->second;
}

std::size_t CalibrationTable::total(CategoryId category) const {
  check_category(category);
  const auto it = totals_.find(category.value);
  return it == totals_.end() ? 0 : it->second;
}

CalibrationTable calibrate(std::span<const LabeledInput> calibration_set, const Taxonomy& taxonomy,
                           CalibrationSummary* summary) {
  CalibrationTable table(taxonomy.config());
  table.calibration_size = calibration_set.size();
  for (const LabeledInput& example : calibration_set) {
    const Assignment a = taxonomy.assign(example.input);
    if (summary && a.clamped) ++summary->clamped;
    table.add(a.category, example.label);
  }
  return table;
}

std::vector<ProbabilityInterval> intervals(const CalibrationTable& table, CategoryId category) {
  const std::vector<std::size_t> counts = table.counts(category);
  const std::size_t total = table.total(category);
  const double denom = static_cast<double>(total + 1);
  std::vector<ProbabilityInterval> result;
  result.reserve(counts.size());
  for (std::size_t n : counts)
    result.push_back({n, total, static_cast<double>(n) / denom, static_cast<double>(n + 1) / denom});
  return result;
}

std::vector<double> IvpPrediction::means() const {
  std::vector<double> result;
  result.reserve(intervals.size());
  for (const ProbabilityInterval& iv : intervals) result.push_back(iv.mean());
  return result;
}

IvpPrediction predict_category(const CalibrationTable& table, const Assignment& assignment) {
  IvpPrediction prediction;
  prediction.category = assignment.category;
  prediction.clamped = assignment.clamped;
  prediction.intervals = intervals(table, assignment.category);
  prediction.uninformative = prediction.intervals.front().total == 0;
  // Means share the denominator, so comparing hits is the exact argmax.
  for (ClassIndex j = 1; j < prediction.intervals.size(); ++j)
    if (prediction.intervals[j].hits > prediction.intervals[prediction.predicted_class].hits)
      prediction.predicted_class = j;
  return prediction;
}

IvpPrediction predict(const CalibrationTable& table, const Taxonomy& taxonomy,
                      const TaxonomyInput& input) {
  if (!(taxonomy.config() == table.taxonomy()))
    throw ConfigError("taxonomy " + to_string(taxonomy.config().kind) +
                      " does not match the calibration table's " +
                      to_string(table.taxonomy().kind) + " configuration");
  return predict_category(table, taxonomy.assign(input));
}

// Text format, version 1:
//   ivp-table 1
//   taxonomy <name>
//   classes <c>
//   k <k>
//   theta <value|none>
//   thresholds <max_output> <second_output> <top_gap>
//   proper_training <q>
//   calibration <l - q>
//   entries <count>
//   <category> <class> <count>     (one line per non-zero count)
//   end
void save(const CalibrationTable& table, std::ostream& out) {
  const TaxonomyConfig& t = table.taxonomy();
  out << "ivp-table 1\n";
  out << "taxonomy " << to_string(t.kind) << '\n';
  out << "classes " << t.class_count << '\n';
  out << "k " << t.k << '\n';
  out << "theta " << (t.theta ? format_double(*t.theta) : std::string("none")) << '\n';
  out << "thresholds " << format_double(t.thresholds.max_output) << ' '
      << format_double(t.thresholds.second_output) << ' ' << format_double(t.thresholds.top_gap)
      << '\n';
  out << "proper_training " << table.proper_training_size << '\n';
  out << "calibration " << table.calibration_size << '\n';
  std::size_t nonzero = 0;
  for (const auto& [category, counts] : table.entries())
    for (std::size_t n : counts) nonzero += n > 0;
  out << "entries " << nonzero << '\n';
  for (const auto& [category, counts] : table.entries())
    for (ClassIndex j = 0; j < counts.size(); ++j)
      if (counts[j] > 0) out << category << ' ' << j << ' ' << counts[j] << '\n';
  out << "end\n";
}

namespace {

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  std::vector<std::string> next() {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_;
      std::istringstream words(line);
      std::vector<std::string> tokens;
      for (std::string w; words >> w;) tokens.push_back(w);
      if (!tokens.empty()) return tokens;
    }
    throw ParseError("table", line_, "unexpected end of file");
  }

  std::vector<std::string> keyed(const std::string& key, std::size_t values) {
    auto tokens = next();
    if (tokens.front() != key || tokens.size() != values + 1)
      fail("expected '" + key + "' with " + std::to_string(values) + " value(s)");
    return tokens;
  }

  std::size_t count(const std::string& text) {
    const auto v = parse_integer(text);
    if (!v || *v < 0) fail("expected a non-negative integer, got '" + text + "'");
    return static_cast<std::size_t>(*v);
  }

  double real(const std::string& text) {
    const auto v = parse_double(text);
    if (!v) fail("expected a number, got '" + text + "'");
    return *v;
  }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError("table", line_, what); }

 private:
  std::istream& in_;
  std::size_t line_ = 0;
};

}  // namespace

CalibrationTable load_table(std::istream& in) {
  LineReader reader(in);
  if (reader.keyed("ivp-table", 1)[1] != "1") reader.fail("unsupported table version");
  TaxonomyConfig t;
  const auto kind = parse_taxonomy_kind(reader.keyed("taxonomy", 1)[1]);
  if (!kind) reader.fail("unknown taxonomy");
  t.kind = *kind;
  t.class_count = reader.count(reader.keyed("classes", 1)[1]);
  t.k = reader.count(reader.keyed("k", 1)[1]);
  const std::string theta = reader.keyed("theta", 1)[1];
  if (theta != "none") t.theta = reader.real(theta);
  const auto thresholds = reader.keyed("thresholds", 3);
  t.thresholds = {reader.real(thresholds[1]), reader.real(thresholds[2]),
                  reader.real(thresholds[3])};

  CalibrationTable table;
  try {
    table = CalibrationTable(t);
  } catch (const ConfigError& e) {
    reader.fail(e.what());
  }
  table.proper_training_size = reader.count(reader.keyed("proper_training", 1)[1]);
  table.calibration_size = reader.count(reader.keyed("calibration", 1)[1]);
  const std::size_t entries = reader.count(reader.keyed("entries", 1)[1]);
  for (std::size_t e = 0; e < entries; ++e) {
    const auto row = reader.next();
    if (row.size() != 3) reader.fail("expected '<category> <class> <count>'");
    const CategoryId category{reader.count(row[0])};
    const ClassIndex label = reader.count(row[1]);
    const std::size_t n = reader.count(row[2]);
    if (category.value >= table.category_count() || label >= table.class_count())
      reader.fail("entry outside the table's categories or classes");
    if (n > 0) table.add(category, label, n);
  }
  if (reader.next().front() != "end") reader.fail("expected 'end'");
  return table;
}

void save_file(const CalibrationTable& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write table file " + path);
  save(table, out);
  if (!out) throw Error("failed writing table file " + path);
}

CalibrationTable load_table_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open table file " + path);
  return load_table(in);
}

}  // namespace ivp
