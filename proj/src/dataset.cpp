#include "ivp/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <string_view>

#include "ivp/error.hpp"
#include "ivp/numeric.hpp"
#include "ivp/random.hpp"

namespace ivp {

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out;
  out.feature_dim = feature_dim;
  out.class_count = class_count;
  out.examples.reserve(rows.size());
  out.ids.reserve(rows.size());
  for (std::size_t r : rows) {
    out.examples.push_back(examples.at(r));
    out.ids.push_back(ids.at(r));
    if (has_softmax()) out.softmax.push_back(softmax.at(r));
  }
  return out;
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(trim(line.substr(start, comma == std::string_view::npos ? comma : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

bool is_indexed_column(std::string_view name, char prefix, std::size_t index) {
  return name.size() > 1 && name.front() == prefix &&
         name.substr(1) == std::to_string(index);
}

}  // namespace

Dataset read_csv(std::istream& in, const std::string& source,
                 std::optional<std::size_t> class_count) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw ParseError(source, 1, "missing header");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_fields(line);
  if (header.size() < 3 || header[0] != "id" || header[1] != "label")
    throw ParseError(source, 1, "header must start with id,label,f0");
  std::size_t feature_dim = 0;
  std::size_t col = 2;
  while (col < header.size() && is_indexed_column(header[col], 'f', feature_dim)) ++feature_dim, ++col;
  std::size_t softmax_dim = 0;
  while (col < header.size() && is_indexed_column(header[col], 's', softmax_dim)) ++softmax_dim, ++col;
  if (feature_dim == 0) throw ParseError(source, 1, "no feature columns f0..");
  if (col != header.size())
    throw ParseError(source, 1, "unexpected column '" + std::string(header[col]) + "'");
  if (softmax_dim == 1) throw ParseError(source, 1, "softmax block needs at least two columns");

  Dataset data;
  data.feature_dim = feature_dim;
  if (softmax_dim > 0) {
    if (class_count && *class_count != softmax_dim)
      throw ParseError(source, 1, "softmax block has " + std::to_string(softmax_dim) +
                                      " columns but " + std::to_string(*class_count) +
                                      " classes were requested");
    class_count = softmax_dim;
  }

  const std::size_t width = header.size();
  std::size_t max_label = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != width)
      throw ParseError(source, line_no, "expected " + std::to_string(width) + " fields, got " +
                                            std::to_string(fields.size()));
    const auto label = parse_integer(fields[1]);
    if (!label || *label < 0)
      throw ParseError(source, line_no, "label '" + std::string(fields[1]) + "' is not a class index");
    LabeledExample ex;
    ex.label = static_cast<ClassIndex>(*label);
    if (class_count && ex.label >= *class_count)
      throw ParseError(source, line_no, "label " + std::to_string(ex.label) +
                                            " out of range for " + std::to_string(*class_count) +
                                            " classes");
    ex.features.reserve(feature_dim);
    for (std::size_t f = 0; f < feature_dim; ++f) {
      const auto v = parse_double(fields[2 + f]);
      if (!v || !std::isfinite(*v))
        throw ParseError(source, line_no, "feature f" + std::to_string(f) + " value '" +
                                              std::string(fields[2 + f]) + "' is not numeric");
      ex.features.push_back(*v);
    }
    if (softmax_dim > 0) {
      std::vector<double> probs;
      probs.reserve(softmax_dim);
      double total = 0.0;
      for (std::size_t s = 0; s < softmax_dim; ++s) {
        const auto v = parse_double(fields[2 + feature_dim + s]);
        if (!v || !std::isfinite(*v) || *v < 0.0)
          throw ParseError(source, line_no, "softmax s" + std::to_string(s) + " value '" +
                                                std::string(fields[2 + feature_dim + s]) +
                                                "' is not a probability");
        probs.push_back(*v);
        total += *v;
      }
      if (std::abs(total - 1.0) > 1e-6)
        throw ParseError(source, line_no, "softmax values sum to " + format_double(total) + ", not 1");
      data.softmax.push_back(std::move(probs));
    }
    max_label = std::max(max_label, ex.label);
    data.ids.emplace_back(fields[0]);
    data.examples.push_back(std::move(ex));
  }
  if (data.examples.empty()) throw ParseError(source, line_no, "no data rows");
  data.class_count = class_count ? *class_count : max_label + 1;
  return data;
}

Dataset load_csv(const std::string& path, std::optional<std::size_t> class_count) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open data file " + path);
  return read_csv(in, path, class_count);
}

void write_csv(const Dataset& data, std::ostream& out) {
  out << "id,label";
  for (std::size_t f = 0; f < data.feature_dim; ++f) out << ",f" << f;
  if (data.has_softmax())
    for (std::size_t s = 0; s < data.class_count; ++s) out << ",s" << s;
  out << '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    out << data.ids[i] << ',' << data.examples[i].label;
    for (double v : data.examples[i].features) out << ',' << format_double(v);
    if (data.has_softmax())
      for (double p : data.softmax[i]) out << ',' << format_double(p);
    out << '\n';
  }
}

void write_csv_file(const Dataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write data file " + path);
  write_csv(data, out);
  if (!out) throw Error("failed writing data file " + path);
}

void SplitSpec::validate() const {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw ConfigError("test fraction must lie in (0, 1)");
  if (!(calibration_fraction > 0.0 && calibration_fraction < 1.0))
    throw ConfigError("calibration fraction must lie in (0, 1)");
}

Split split(const Dataset& data, const SplitSpec& spec) {
  spec.validate();
  const std::size_t n = data.size();
  const auto test_size = static_cast<std::size_t>(std::floor(static_cast<double>(n) * spec.test_fraction));
  const std::size_t train_size = n - test_size;
  const auto calibration_size =
      static_cast<std::size_t>(std::floor(static_cast<double>(train_size) * spec.calibration_fraction));
  const std::size_t proper_size = train_size - calibration_size;
  if (test_size == 0 || calibration_size == 0 || proper_size == 0)
    throw ConfigError(std::to_string(n) + " examples are too few to fill test, calibration and "
                      "proper-training parts");

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(spec.seed);
  rng.shuffle(std::span(order));

  Split parts;
  parts.test.assign(order.begin(), order.begin() + test_size);
  parts.calibration.assign(order.begin() + test_size, order.begin() + test_size + calibration_size);
  parts.proper_training.assign(order.begin() + test_size + calibration_size, order.end());

  std::vector<bool> present(data.class_count, false);
  for (std::size_t i : parts.proper_training) present[data.examples[i].label] = true;
  for (ClassIndex j = 0; j < data.class_count; ++j)
    if (!present[j])
      throw ConfigError("class " + std::to_string(j) + " has no proper-training examples after "
                        "the split; try another --seed or more data");
  return parts;
}

std::vector<std::vector<double>> gaussian_centers(std::size_t class_count, std::size_t dim,
                                                  double separation) {
  std::vector<std::vector<double>> centers(class_count, std::vector<double>(dim, 0.0));
  if (dim >= class_count) {
    const double scale = separation / std::sqrt(2.0);
    for (std::size_t j = 0; j < class_count; ++j) centers[j][j] = scale;
  } else {
    for (std::size_t j = 0; j < class_count; ++j) centers[j][0] = separation * static_cast<double>(j);
  }
  return centers;
}

Dataset synth_gaussians(std::size_t class_count, std::size_t dim, std::size_t n_per_class,
                        double separation, std::uint64_t seed, bool with_softmax) {
  if (class_count == 0) throw ConfigError("need at least one class");
  if (dim == 0) throw ConfigError("need at least one dimension");
  if (n_per_class == 0) throw ConfigError("need at least one example per class");
  if (!(separation >= 0.0) || !std::isfinite(separation))
    throw ConfigError("separation must be finite and non-negative");

  const auto centers = gaussian_centers(class_count, dim, separation);
  Rng rng(seed);
  Dataset data;
  data.feature_dim = dim;
  data.class_count = class_count;
  for (std::size_t i = 0; i < n_per_class; ++i) {
    for (ClassIndex j = 0; j < class_count; ++j) {
      LabeledExample ex;
      ex.label = j;
      ex.features.resize(dim);
      for (std::size_t d = 0; d < dim; ++d) ex.features[d] = centers[j][d] + rng.normal();
      if (with_softmax) {
        std::vector<double> logits(class_count);
        for (ClassIndex c = 0; c < class_count; ++c) {
          double sq = 0.0;
          for (std::size_t d = 0; d < dim; ++d) {
            const double diff = ex.features[d] - centers[c][d];
            sq += diff * diff;
          }
          logits[c] = -0.5 * sq;
        }
        const double top = *std::max_element(logits.begin(), logits.end());
        double total = 0.0;
        for (double& l : logits) total += (l = std::exp(l - top));
        for (double& l : logits) l /= total;
        data.softmax.push_back(std::move(logits));
      }
      data.ids.push_back("s" + std::to_string(data.examples.size()));
      data.examples.push_back(std::move(ex));
    }
  }
  return data;
}

}  // namespace ivp
