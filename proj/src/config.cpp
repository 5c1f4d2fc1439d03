#include "ivp/config.hpp"

#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <sstream>

#include "ivp/error.hpp"
#include "ivp/numeric.hpp"

namespace ivp {

mlp::TrainConfig RunConfig::train_config() const {
  mlp::TrainConfig t = train;
  t.seed = seed;
  return t;
}

std::vector<std::size_t> RunConfig::embedding_dims(std::size_t feature_dim) const {
  std::vector<std::size_t> dims{feature_dim};
  dims.insert(dims.end(), hidden_dims.begin(), hidden_dims.end());
  dims.push_back(embedding_dim);
  return dims;
}

std::vector<std::size_t> RunConfig::classifier_dims(std::size_t feature_dim,
                                                    std::size_t class_count) const {
  std::vector<std::size_t> dims{feature_dim};
  dims.insert(dims.end(), classifier_hidden_dims.begin(), classifier_hidden_dims.end());
  dims.push_back(class_count);
  return dims;
}

void RunConfig::validate() const {
  split_spec().validate();
  train_config().validate();
  if (bins == 0) throw ConfigError("bins must be at least 1");
  if (embedding_dim == 0) throw ConfigError("embedding_dim must be positive");
  if (taxonomy.k == 0) throw ConfigError("k must be at least 1");
  if (taxonomy.theta && !(*taxonomy.theta > 0.0)) throw ConfigError("theta must be positive");
  if (embedding == EmbeddingSource::Model && model_path.empty())
    throw ConfigError("embedding = model needs a model path");
}

namespace {

struct Setting {
  std::string key;
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

[[noreturn]] void bad_value(std::string_view key, std::string_view value, const char* expected) {
  throw ConfigError("setting '" + std::string(key) + "': '" + std::string(value) + "' is not " +
                    expected);
}

double real_value(std::string_view key, std::string_view value) {
  const auto v = parse_double(value);
  if (!v) bad_value(key, value, "a number");
  return *v;
}

std::size_t count_value(std::string_view key, std::string_view value) {
  const auto v = parse_integer(value);
  if (!v || *v < 0) bad_value(key, value, "a non-negative integer");
  return static_cast<std::size_t>(*v);
}

std::vector<std::size_t> list_value(std::string_view key, std::string_view value) {
  std::vector<std::size_t> out;
  value = trim(value);
  if (value.empty() || value == "none") return out;
  std::size_t start = 0;
  while (start <= value.size()) {
    const std::size_t comma = value.find(',', start);
    const auto item = value.substr(start, comma == std::string_view::npos ? comma : comma - start);
    const std::size_t n = count_value(key, item);
    if (n == 0) bad_value(key, value, "a list of positive widths");
    out.push_back(n);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string list_text(const std::vector<std::size_t>& values) {
  if (values.empty()) return "none";
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i)
    out += (i ? "," : "") + std::to_string(values[i]);
  return out;
}

const std::vector<Setting>& settings() {
  static const std::vector<Setting> table = {
      {"input", [](RunConfig& c, std::string_view v) { c.input = v; },
       [](const RunConfig& c) { return c.input; }},
      {"output_dir", [](RunConfig& c, std::string_view v) { c.output_dir = v; },
       [](const RunConfig& c) { return c.output_dir; }},
      {"taxonomy",
       [](RunConfig& c, std::string_view v) {
         const auto kind = parse_taxonomy_kind(v);
         if (!kind) bad_value("taxonomy", v, "a taxonomy (knn_v1, knn_v2, nc_v1, nc_v2, base_v1..base_v4)");
         c.taxonomy.kind = *kind;
       },
       [](const RunConfig& c) { return to_string(c.taxonomy.kind); }},
      {"k",
       [](RunConfig& c, std::string_view v) {
         c.taxonomy.k = count_value("k", v);
         if (c.taxonomy.k == 0) bad_value("k", v, "a positive integer");
       },
       [](const RunConfig& c) { return std::to_string(c.taxonomy.k); }},
      {"theta",
       [](RunConfig& c, std::string_view v) {
         if (trim(v) == "auto") {
           c.taxonomy.theta.reset();
         } else {
           const double t = real_value("theta", v);
           if (!(t > 0.0)) bad_value("theta", v, "positive or 'auto'");
           c.taxonomy.theta = t;
         }
       },
       [](const RunConfig& c) {
         return c.taxonomy.theta ? format_double(*c.taxonomy.theta) : std::string("auto");
       }},
      {"base_v2_threshold",
       [](RunConfig& c, std::string_view v) {
         c.taxonomy.thresholds.max_output = real_value("base_v2_threshold", v);
       },
       [](const RunConfig& c) { return format_double(c.taxonomy.thresholds.max_output); }},
      {"base_v3_threshold",
       [](RunConfig& c, std::string_view v) {
         c.taxonomy.thresholds.second_output = real_value("base_v3_threshold", v);
       },
       [](const RunConfig& c) { return format_double(c.taxonomy.thresholds.second_output); }},
      {"base_v4_threshold",
       [](RunConfig& c, std::string_view v) {
         c.taxonomy.thresholds.top_gap = real_value("base_v4_threshold", v);
       },
       [](const RunConfig& c) { return format_double(c.taxonomy.thresholds.top_gap); }},
      {"embedding",
       [](RunConfig& c, std::string_view v) {
         v = trim(v);
         if (v == "identity") c.embedding = EmbeddingSource::Identity;
         else if (v == "siamese") c.embedding = EmbeddingSource::Siamese;
         else if (v == "model") c.embedding = EmbeddingSource::Model;
         else bad_value("embedding", v, "identity, siamese or model");
       },
       [](const RunConfig& c) -> std::string {
         switch (c.embedding) {
           case EmbeddingSource::Identity: return "identity";
           case EmbeddingSource::Siamese: return "siamese";
           case EmbeddingSource::Model: return "model";
         }
         return "siamese";
       }},
      {"model", [](RunConfig& c, std::string_view v) { c.model_path = v; },
       [](const RunConfig& c) { return c.model_path; }},
      {"hidden_dims",
       [](RunConfig& c, std::string_view v) { c.hidden_dims = list_value("hidden_dims", v); },
       [](const RunConfig& c) { return list_text(c.hidden_dims); }},
      {"embedding_dim",
       [](RunConfig& c, std::string_view v) { c.embedding_dim = count_value("embedding_dim", v); },
       [](const RunConfig& c) { return std::to_string(c.embedding_dim); }},
      {"margin", [](RunConfig& c, std::string_view v) { c.train.margin = real_value("margin", v); },
       [](const RunConfig& c) { return format_double(c.train.margin); }},
      {"learning_rate",
       [](RunConfig& c, std::string_view v) { c.train.learning_rate = real_value("learning_rate", v); },
       [](const RunConfig& c) { return format_double(c.train.learning_rate); }},
      {"epochs", [](RunConfig& c, std::string_view v) { c.train.epochs = count_value("epochs", v); },
       [](const RunConfig& c) { return std::to_string(c.train.epochs); }},
      {"batch_size",
       [](RunConfig& c, std::string_view v) { c.train.batch_size = count_value("batch_size", v); },
       [](const RunConfig& c) { return std::to_string(c.train.batch_size); }},
      {"pairs_per_epoch",
       [](RunConfig& c, std::string_view v) {
         c.train.pairs_per_epoch = count_value("pairs_per_epoch", v);
       },
       [](const RunConfig& c) { return std::to_string(c.train.pairs_per_epoch); }},
      {"softmax",
       [](RunConfig& c, std::string_view v) {
         v = trim(v);
         if (v == "columns") c.softmax = SoftmaxSource::Columns;
         else if (v == "classifier") c.softmax = SoftmaxSource::Classifier;
         else bad_value("softmax", v, "columns or classifier");
       },
       [](const RunConfig& c) {
         return std::string(c.softmax == SoftmaxSource::Columns ? "columns" : "classifier");
       }},
      {"classifier_hidden_dims",
       [](RunConfig& c, std::string_view v) {
         c.classifier_hidden_dims = list_value("classifier_hidden_dims", v);
       },
       [](const RunConfig& c) { return list_text(c.classifier_hidden_dims); }},
      {"test_fraction",
       [](RunConfig& c, std::string_view v) { c.test_fraction = real_value("test_fraction", v); },
       [](const RunConfig& c) { return format_double(c.test_fraction); }},
      {"calibration_fraction",
       [](RunConfig& c, std::string_view v) {
         c.calibration_fraction = real_value("calibration_fraction", v);
       },
       [](const RunConfig& c) { return format_double(c.calibration_fraction); }},
      {"bins", [](RunConfig& c, std::string_view v) { c.bins = count_value("bins", v); },
       [](const RunConfig& c) { return std::to_string(c.bins); }},
      {"seed",
       [](RunConfig& c, std::string_view v) {
         const auto s = parse_integer(v);
         if (!s || *s < 0) bad_value("seed", v, "a non-negative integer");
         c.seed = static_cast<std::uint64_t>(*s);
       },
       [](const RunConfig& c) { return std::to_string(c.seed); }},
  };
  return table;
}

}  // namespace

const std::vector<std::string>& run_config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> out;
    for (const Setting& s : settings()) out.push_back(s.key);
    return out;
  }();
  return keys;
}

void apply_setting(RunConfig& config, std::string_view key, std::string_view value) {
  key = trim(key);
  for (const Setting& s : settings()) {
    if (s.key == key) {
      s.set(config, trim(value));
      return;
    }
  }
  throw ConfigError("unknown setting '" + std::string(key) + "'");
}

RunConfig read_run_config(std::istream& in, const std::string& source, RunConfig base) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view(line);
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) throw ParseError(source, line_no, "expected 'key = value'");
    try {
      apply_setting(base, view.substr(0, eq), view.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ParseError(source, line_no, e.what());
    }
  }
  return base;
}

RunConfig load_run_config(const std::string& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file " + path);
  return read_run_config(in, path, std::move(base));
}

void write_run_config(const RunConfig& config, std::ostream& out) {
  for (const Setting& s : settings()) out << s.key << " = " << s.get(config) << '\n';
}

}  // namespace ivp
