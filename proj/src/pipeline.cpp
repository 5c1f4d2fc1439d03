#include "ivp/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "ivp/error.hpp"
#include "ivp/numeric.hpp"

namespace ivp {

Embedder::Embedder(mlp::MlpParams network) : network_(std::move(network)) {
  if (network_->mode != mlp::Mode::Embedding)
    throw ConfigError("embedding network must be saved in embedding mode");
}

Embedding Embedder::embed(std::span<const double> features) const {
  if (!network_) return Embedding(features.begin(), features.end());
  return mlp::forward(*network_, features);
}

std::vector<LabeledEmbedding> embed_rows(const Dataset& data, std::span<const std::size_t> rows,
                                         const Embedder& embedder) {
  std::vector<LabeledEmbedding> out;
  out.reserve(rows.size());
  for (std::size_t r : rows)
    out.push_back({embedder.embed(data.examples.at(r).features), data.examples[r].label});
  return out;
}

Dataset embed_dataset(const Dataset& data, const Embedder& embedder) {
  Dataset out = data;
  for (LabeledExample& ex : out.examples) ex.features = embedder.embed(ex.features);
  out.feature_dim = out.examples.empty() ? 0 : out.examples.front().features.size();
  return out;
}

Dataset attach_softmax(const Dataset& data, const mlp::MlpParams& classifier) {
  if (classifier.mode != mlp::Mode::Classifier)
    throw ConfigError("softmax source must be a classifier-mode network");
  if (classifier.output_dim() != data.class_count)
    throw ConfigError("classifier has " + std::to_string(classifier.output_dim()) +
                      " outputs but the data has " + std::to_string(data.class_count) + " classes");
  Dataset out = data;
  out.softmax.clear();
  out.softmax.reserve(data.size());
  for (const LabeledExample& ex : data.examples) out.softmax.push_back(mlp::forward(classifier, ex.features));
  return out;
}

void write_predictions(std::span<const PredictionRow> rows, std::size_t class_count,
                       std::ostream& out) {
  out << "id,label,category,total,clamped,j_best";
  for (std::size_t j = 0; j < class_count; ++j) out << ",L" << j << ",U" << j;
  out << '\n';
  for (const PredictionRow& row : rows) {
    const IvpPrediction& p = row.record.prediction;
    out << row.id << ',' << row.record.true_label << ',' << p.category.value << ','
        << p.intervals.front().total << ',' << (p.clamped ? 1 : 0) << ',' << p.predicted_class;
    for (const ProbabilityInterval& iv : p.intervals)
      out << ',' << format_double(iv.lower) << ',' << format_double(iv.upper);
    out << '\n';
  }
}

std::vector<PredictionRow> read_predictions(std::istream& in, const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(source, 1, "missing header");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    for (std::string field; std::getline(ss, field, ',');) header.emplace_back(trim(field));
  }
  const char* fixed[] = {"id", "label", "category", "total", "clamped", "j_best"};
  if (header.size() < 6 + 4 || (header.size() - 6) % 2 != 0)
    throw ParseError(source, 1, "not a predictions header");
  for (std::size_t i = 0; i < 6; ++i)
    if (header[i] != fixed[i]) throw ParseError(source, 1, "expected column '" + std::string(fixed[i]) + "'");
  const std::size_t classes = (header.size() - 6) / 2;

  auto count_field = [&](const std::string& text, std::size_t line_no) {
    const auto v = parse_integer(text);
    if (!v || *v < 0) throw ParseError(source, line_no, "'" + text + "' is not a non-negative integer");
    return static_cast<std::size_t>(*v);
  };

  std::vector<PredictionRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    for (std::string field; std::getline(ss, field, ',');) fields.emplace_back(trim(field));
    if (fields.size() != header.size())
      throw ParseError(source, line_no, "expected " + std::to_string(header.size()) + " fields");
    PredictionRow row;
    row.id = fields[0];
    row.record.true_label = count_field(fields[1], line_no);
    IvpPrediction& p = row.record.prediction;
    p.category = {count_field(fields[2], line_no)};
    const std::size_t total = count_field(fields[3], line_no);
    p.clamped = count_field(fields[4], line_no) != 0;
    p.predicted_class = count_field(fields[5], line_no);
    p.uninformative = total == 0;
    if (p.predicted_class >= classes || row.record.true_label >= classes)
      throw ParseError(source, line_no, "class index out of range");
    for (std::size_t j = 0; j < classes; ++j) {
      const auto lower = parse_double(fields[6 + 2 * j]);
      const auto upper = parse_double(fields[7 + 2 * j]);
      if (!lower || !upper || !(0.0 <= *lower && *lower <= *upper && *upper <= 1.0))
        throw ParseError(source, line_no, "bad interval for class " + std::to_string(j));
      const auto hits = static_cast<std::size_t>(std::llround(*lower * static_cast<double>(total + 1)));
      p.intervals.push_back({hits, total, *lower, *upper});
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<PredictionRow> predict_rows(const CalibrationTable& table, const Taxonomy& taxonomy,
                                        const Dataset& data, std::span<const std::size_t> rows,
                                        const Embedder& embedder) {
  std::vector<PredictionRow> out;
  out.reserve(rows.size());
  for (std::size_t r : rows) {
    const Embedding embedding = embedder.embed(data.examples.at(r).features);
    TaxonomyInput input{embedding, {}};
    if (data.has_softmax()) input.softmax = data.softmax[r];
    out.push_back({data.ids[r], {predict(table, taxonomy, input), data.examples[r].label}});
  }
  return out;
}

namespace {

template <typename F>
auto run_stage(const char* name, F&& body) {
  try {
    return body();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

std::vector<LabeledInput> labeled_inputs(const Dataset& data, std::span<const std::size_t> rows,
                                         const std::vector<LabeledEmbedding>& embedded) {
  std::vector<LabeledInput> out;
  out.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    TaxonomyInput input{embedded[i].embedding, {}};
    if (data.has_softmax()) input.softmax = data.softmax[rows[i]];
    out.push_back({input, embedded[i].label});
  }
  return out;
}

template <typename Writer>
void write_file(const std::filesystem::path& path, Writer&& writer) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  writer(out);
  if (!out) throw Error("failed writing " + path.string());
}

}  // namespace

PipelineResult run_pipeline(const RunConfig& config, const Dataset& input_data) {
  PipelineResult result;
  result.config = config;
  RunConfig& cfg = result.config;

  run_stage("config", [&] {
    cfg.validate();
    cfg.taxonomy.class_count = input_data.class_count;
    cfg.taxonomy.validate();
    if (uses_softmax(cfg.taxonomy.kind) && cfg.softmax == SoftmaxSource::Columns &&
        !input_data.has_softmax())
      throw ConfigError(to_string(cfg.taxonomy.kind) +
                        " needs softmax columns s0..s{c-1} in the input, or softmax = classifier");
    return 0;
  });

  result.split = run_stage("split", [&] { return split(input_data, cfg.split_spec()); });
  const Dataset proper = input_data.subset(result.split.proper_training);

  std::optional<Dataset> with_softmax;
  run_stage("classifier", [&] {
    if (!uses_softmax(cfg.taxonomy.kind) || cfg.softmax == SoftmaxSource::Columns) return 0;
    result.classifier = mlp::train_classifier(
        proper.examples, cfg.classifier_dims(input_data.feature_dim, input_data.class_count),
        cfg.train_config());
    with_softmax = attach_softmax(input_data, *result.classifier);
    return 0;
  });
  const Dataset& data = with_softmax ? *with_softmax : input_data;

  Embedder embedder = run_stage("train", [&] {
    // Softmax taxonomies never look at the embedding.
    if (uses_softmax(cfg.taxonomy.kind) || cfg.embedding == EmbeddingSource::Identity)
      return Embedder();
    if (cfg.embedding == EmbeddingSource::Model) return Embedder(mlp::load_file(cfg.model_path));
    result.embedding_network = mlp::train_siamese(
        proper.examples, cfg.embedding_dims(input_data.feature_dim), cfg.train_config());
    return Embedder(*result.embedding_network);
  });

  const auto proper_embedded = run_stage("embed", [&] {
    return embed_rows(data, result.split.proper_training, embedder);
  });

  const Taxonomy taxonomy = run_stage("fit", [&] { return Taxonomy::fit(cfg.taxonomy, proper_embedded); });
  cfg.taxonomy = taxonomy.config();

  result.table = run_stage("calibrate", [&] {
    const auto embedded = embed_rows(data, result.split.calibration, embedder);
    const auto inputs = labeled_inputs(data, result.split.calibration, embedded);
    CalibrationSummary summary;
    CalibrationTable table = calibrate(inputs, taxonomy, &summary);
    table.proper_training_size = result.split.proper_training.size();
    result.calibration_clamped = summary.clamped;
    return table;
  });

  run_stage("predict", [&] {
    const auto start = std::chrono::steady_clock::now();
    result.predictions = predict_rows(result.table, taxonomy, data, result.split.test, embedder);
    const std::chrono::duration<double, std::milli> elapsed = std::chrono::steady_clock::now() - start;
    result.latency_ms = elapsed.count() / static_cast<double>(result.predictions.size());
    return 0;
  });

  result.report = run_stage("evaluate", [&] {
    std::vector<EvalRecord> records;
    records.reserve(result.predictions.size());
    for (const PredictionRow& row : result.predictions) records.push_back(row.record);
    return evaluate(records, cfg.bins);
  });

  if (!cfg.output_dir.empty()) {
    run_stage("write", [&] {
      const std::filesystem::path dir(cfg.output_dir);
      std::filesystem::create_directories(dir);
      write_file(dir / "config.txt", [&](std::ostream& out) { write_run_config(cfg, out); });
      if (result.embedding_network) mlp::save_file(*result.embedding_network, (dir / "model.txt").string());
      if (result.classifier) mlp::save_file(*result.classifier, (dir / "classifier.txt").string());
      save_file(result.table, (dir / "table.txt").string());
      write_file(dir / "predictions.csv", [&](std::ostream& out) {
        write_predictions(result.predictions, data.class_count, out);
      });
      write_file(dir / "report.txt", [&](std::ostream& out) {
        out << "taxonomy " << to_string(cfg.taxonomy.kind) << '\n';
        write_report(result.report, out);
      });
      write_file(dir / "curves.csv", [&](std::ostream& out) { write_curves(result.report.curves, out); });
      write_file(dir / "timing.txt", [&](std::ostream& out) {
        out << "latency_ms " << result.latency_ms << '\n';
      });
      return 0;
    });
  }
  return result;
}

PipelineResult run_pipeline(const RunConfig& config) {
  const Dataset data = run_stage("load", [&] {
    if (config.input.empty()) throw ConfigError("no input file configured");
    return load_csv(config.input);
  });
  return run_pipeline(config, data);
}

}  // namespace ivp
