// Command-line driver for the inductive Venn prediction pipeline.
//
//   ivp synth      generate Gaussian CSV data
//   ivp train      fit an embedding (or classifier) network on proper training
//   ivp embed      map a CSV through a saved network
//   ivp calibrate  split embedded data, fit the taxonomy, build the table
//   ivp predict    intervals for new rows from a saved table
//   ivp evaluate   metrics report from a predictions file
//   ivp report     side-by-side summary of report files
//   ivp run        all of the above in one go

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ivp/config.hpp"
#include "ivp/dataset.hpp"
#include "ivp/error.hpp"
#include "ivp/numeric.hpp"
#include "ivp/pipeline.hpp"

namespace fs = std::filesystem;

namespace {

const std::map<std::string, std::string>& setting_help() {
  static const std::map<std::string, std::string> help = {
      {"input", "input CSV (id,label,f0..[,s0..])"},
      {"output_dir", "directory for run artifacts"},
      {"taxonomy", "knn_v1 | knn_v2 | nc_v1 | nc_v2 | base_v1 | base_v2 | base_v3 | base_v4"},
      {"k", "neighbours for the k-NN taxonomies"},
      {"theta", "nc_v2 distance threshold, or 'auto'"},
      {"base_v2_threshold", "base_v2 cut on the top softmax output"},
      {"base_v3_threshold", "base_v3 cut on the second softmax output"},
      {"base_v4_threshold", "base_v4 cut on the top-two gap"},
      {"embedding", "identity | siamese | model"},
      {"model", "saved embedding network (embedding = model)"},
      {"hidden_dims", "comma-separated hidden widths, or 'none'"},
      {"embedding_dim", "embedding width"},
      {"margin", "contrastive margin"},
      {"learning_rate", "SGD step size"},
      {"epochs", "training epochs"},
      {"batch_size", "pairs (or rows) per SGD step"},
      {"pairs_per_epoch", "contrastive pairs sampled per epoch"},
      {"softmax", "columns | classifier: where baseline taxonomies get softmax outputs"},
      {"classifier_hidden_dims", "hidden widths of the softmax classifier"},
      {"test_fraction", "share of rows held out for testing"},
      {"calibration_fraction", "share of the remaining rows used for calibration"},
      {"bins", "ECE/MCE bin count"},
      {"seed", "split, initialisation and pair-sampling seed"},
  };
  return help;
}

std::string flag_name(std::string key) {
  for (char& ch : key)
    if (ch == '_') ch = '-';
  return "--" + key;
}

// RunConfig flags shared by the pipeline subcommands. A --config file is
// applied first; explicit flags override it.
class ConfigFlags {
 public:
  void attach(CLI::App& app) {
    app.add_option("--config", config_path_, "key = value run configuration file");
    for (const std::string& key : ivp::run_config_keys()) {
      const auto it = setting_help().find(key);
      CLI::Option* opt =
          app.add_option(flag_name(key), values_[key], it == setting_help().end() ? key : it->second);
      options_.emplace_back(key, opt);
    }
  }

  ivp::RunConfig resolve() const {
    ivp::RunConfig cfg;
    if (!config_path_.empty()) cfg = ivp::load_run_config(config_path_);
    for (const auto& [key, opt] : options_)
      if (opt->count() > 0) ivp::apply_setting(cfg, key, values_.at(key));
    return cfg;
  }

 private:
  std::string config_path_;
  std::map<std::string, std::string> values_;
  std::vector<std::pair<std::string, CLI::Option*>> options_;
};

void require(bool ok, const std::string& what) {
  if (!ok) throw ivp::ConfigError(what);
}

template <typename Writer>
void write_to(const fs::path& path, Writer&& writer) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ivp::Error("cannot write " + path.string());
  writer(out);
  if (!out) throw ivp::Error("failed writing " + path.string());
}

std::vector<ivp::LabeledEmbedding> as_embeddings(const ivp::Dataset& data) {
  std::vector<ivp::LabeledEmbedding> out;
  out.reserve(data.size());
  for (const ivp::LabeledExample& ex : data.examples) out.push_back({ex.features, ex.label});
  return out;
}

void print_summary(const ivp::CalibrationReport& r, std::ostream& out) {
  out << "n " << r.n << "  accuracy " << ivp::format_double(r.accuracy) << "  nll "
      << ivp::format_double(r.nll) << "  brier " << ivp::format_double(r.brier) << "  D "
      << ivp::format_double(r.diameter) << "  ece " << ivp::format_double(r.ece) << "  mce "
      << ivp::format_double(r.mce) << '\n';
  if (r.uninformative) out << "warning: " << r.uninformative << " predictions fell in empty categories\n";
  if (r.clamped) out << "warning: " << r.clamped << " knn_v2 assignments were clamped\n";
}

// --- synth -----------------------------------------------------------------

struct SynthArgs {
  std::size_t classes = 3;
  std::size_t dim = 2;
  std::size_t per_class = 100;
  double separation = 4.0;
  std::uint64_t seed = 42;
  bool softmax = false;
  std::string out;
};

void run_synth(const SynthArgs& a) {
  const ivp::Dataset data =
      ivp::synth_gaussians(a.classes, a.dim, a.per_class, a.separation, a.seed, a.softmax);
  if (a.out.empty() || a.out == "-") {
    ivp::write_csv(data, std::cout);
  } else {
    write_to(a.out, [&](std::ostream& out) { ivp::write_csv(data, out); });
    std::cout << "wrote " << data.size() << " rows to " << a.out << '\n';
  }
}

// --- train -----------------------------------------------------------------

void run_train(const ivp::RunConfig& cfg, const std::string& out, bool classifier) {
  require(!cfg.input.empty(), "train needs --input");
  require(!out.empty(), "train needs --out");
  cfg.validate();
  const ivp::Dataset data = ivp::load_csv(cfg.input);
  const ivp::Split parts = ivp::split(data, cfg.split_spec());
  const ivp::Dataset proper = data.subset(parts.proper_training);
  const ivp::mlp::MlpParams params =
      classifier ? ivp::mlp::train_classifier(proper.examples,
                                              cfg.classifier_dims(data.feature_dim, data.class_count),
                                              cfg.train_config())
                 : ivp::mlp::train_siamese(proper.examples, cfg.embedding_dims(data.feature_dim),
                                           cfg.train_config());
  if (fs::path(out).has_parent_path()) fs::create_directories(fs::path(out).parent_path());
  ivp::mlp::save_file(params, out);
  std::cout << "trained " << ivp::mlp::to_string(params.mode) << " network on "
            << proper.size() << " proper-training rows; wrote " << out << '\n';
}

// --- embed -----------------------------------------------------------------

void run_embed(const std::string& input, const std::string& model, const std::string& classifier,
               const std::string& out) {
  require(!input.empty() && !out.empty(), "embed needs --input and --out");
  ivp::Dataset data = ivp::load_csv(input);
  if (!classifier.empty()) data = ivp::attach_softmax(data, ivp::mlp::load_file(classifier));
  const ivp::Embedder embedder =
      model.empty() ? ivp::Embedder() : ivp::Embedder(ivp::mlp::load_file(model));
  const ivp::Dataset embedded = ivp::embed_dataset(data, embedder);
  write_to(out, [&](std::ostream& o) { ivp::write_csv(embedded, o); });
  std::cout << "wrote " << embedded.size() << " rows of width " << embedded.feature_dim << " to "
            << out << '\n';
}

// --- calibrate -------------------------------------------------------------

void run_calibrate(ivp::RunConfig cfg) {
  require(!cfg.input.empty(), "calibrate needs --input (embedded CSV)");
  require(!cfg.output_dir.empty(), "calibrate needs --output-dir");
  cfg.validate();
  const ivp::Dataset data = ivp::load_csv(cfg.input);
  cfg.taxonomy.class_count = data.class_count;
  if (ivp::uses_softmax(cfg.taxonomy.kind))
    require(data.has_softmax(), ivp::to_string(cfg.taxonomy.kind) + " needs softmax columns in the input");

  const ivp::Split parts = ivp::split(data, cfg.split_spec());
  const ivp::Dataset proper = data.subset(parts.proper_training);
  const ivp::Dataset calibration = data.subset(parts.calibration);
  const ivp::Dataset test = data.subset(parts.test);

  const ivp::Taxonomy taxonomy = ivp::Taxonomy::fit(cfg.taxonomy, as_embeddings(proper));
  std::vector<ivp::LabeledInput> inputs;
  inputs.reserve(calibration.size());
  for (std::size_t i = 0; i < calibration.size(); ++i) {
    ivp::TaxonomyInput in{calibration.examples[i].features, {}};
    if (calibration.has_softmax()) in.softmax = calibration.softmax[i];
    inputs.push_back({in, calibration.examples[i].label});
  }
  ivp::CalibrationSummary summary;
  ivp::CalibrationTable table = ivp::calibrate(inputs, taxonomy, &summary);
  table.proper_training_size = proper.size();

  const fs::path dir(cfg.output_dir);
  fs::create_directories(dir);
  ivp::save_file(table, (dir / "table.txt").string());
  ivp::write_csv_file(proper, (dir / "reference.csv").string());
  ivp::write_csv_file(test, (dir / "test.csv").string());
  std::cout << "calibrated " << ivp::to_string(cfg.taxonomy.kind) << " on " << calibration.size()
            << " rows into " << table.entries().size() << " of " << table.category_count()
            << " categories; wrote table.txt, reference.csv, test.csv to " << dir.string() << '\n';
  if (summary.clamped) std::cout << "warning: " << summary.clamped << " calibration assignments clamped\n";
}

// --- predict ---------------------------------------------------------------

void run_predict(const std::string& table_path, const std::string& reference, const std::string& input,
                 const std::string& model, const std::string& out) {
  require(!table_path.empty() && !input.empty() && !out.empty(),
          "predict needs --table, --input and --out");
  const ivp::CalibrationTable table = ivp::load_table_file(table_path);
  const ivp::TaxonomyConfig& tc = table.taxonomy();
  std::vector<ivp::LabeledEmbedding> proper;
  if (!ivp::uses_softmax(tc.kind)) {
    require(!reference.empty(), ivp::to_string(tc.kind) + " needs --reference (proper-training embeddings)");
    proper = as_embeddings(ivp::load_csv(reference, tc.class_count));
  }
  const ivp::Taxonomy taxonomy = ivp::Taxonomy::fit(tc, proper);
  const ivp::Dataset data = ivp::load_csv(input, tc.class_count);
  const ivp::Embedder embedder =
      model.empty() ? ivp::Embedder() : ivp::Embedder(ivp::mlp::load_file(model));
  std::vector<std::size_t> rows(data.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  const auto predictions = ivp::predict_rows(table, taxonomy, data, rows, embedder);
  write_to(out, [&](std::ostream& o) { ivp::write_predictions(predictions, tc.class_count, o); });
  std::cout << "wrote " << predictions.size() << " predictions to " << out << '\n';
}

// --- evaluate --------------------------------------------------------------

void run_evaluate(const std::string& predictions_path, std::size_t bins, const std::string& out_dir,
                  const std::string& taxonomy_name) {
  require(!predictions_path.empty(), "evaluate needs --predictions");
  std::ifstream in(predictions_path);
  if (!in) throw ivp::Error("cannot open " + predictions_path);
  const auto rows = ivp::read_predictions(in, predictions_path);
  std::vector<ivp::EvalRecord> records;
  records.reserve(rows.size());
  for (const auto& row : rows) records.push_back(row.record);
  const ivp::CalibrationReport report = ivp::evaluate(records, bins);
  if (out_dir.empty()) {
    ivp::write_report(report, std::cout);
    return;
  }
  const fs::path dir(out_dir);
  fs::create_directories(dir);
  write_to(dir / "report.txt", [&](std::ostream& o) {
    if (!taxonomy_name.empty()) o << "taxonomy " << taxonomy_name << '\n';
    ivp::write_report(report, o);
  });
  write_to(dir / "curves.csv", [&](std::ostream& o) { ivp::write_curves(report.curves, o); });
  print_summary(report, std::cout);
}

// --- report ----------------------------------------------------------------

std::map<std::string, std::string> read_report(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ivp::Error("cannot open " + path.string());
  std::map<std::string, std::string> values;
  for (std::string line; std::getline(in, line);) {
    std::istringstream words(line);
    std::string key, value;
    if (words >> key >> value && key != "bin") values.emplace(key, value);
  }
  return values;
}

void run_report(const std::vector<std::string>& inputs) {
  require(!inputs.empty(), "report needs at least one report file or run directory");
  const std::vector<std::string> columns{"accuracy", "nll", "brier", "diameter", "ece", "mce"};
  std::cout << std::left << std::setw(12) << "taxonomy";
  for (const auto& c : columns) std::cout << std::setw(12) << c;
  std::cout << "source\n";
  for (const std::string& input : inputs) {
    fs::path path(input);
    if (fs::is_directory(path)) path /= "report.txt";
    const auto values = read_report(path);
    auto get = [&](const std::string& key) -> std::string {
      const auto it = values.find(key);
      if (it == values.end()) return "-";
      const auto v = ivp::parse_double(it->second);
      if (!v) return it->second;
      std::ostringstream s;
      s << std::fixed << std::setprecision(key == "nll" ? 3 : 4) << *v;
      return s.str();
    };
    std::cout << std::setw(12) << get("taxonomy");
    for (const auto& c : columns) std::cout << std::setw(12) << get(c);
    std::cout << path.string() << '\n';
  }
}

// --- run -------------------------------------------------------------------

void run_all(const ivp::RunConfig& cfg) {
  const ivp::PipelineResult r = ivp::run_pipeline(cfg);
  std::cout << "taxonomy " << ivp::to_string(r.config.taxonomy.kind) << ": proper "
            << r.split.proper_training.size() << ", calibration " << r.split.calibration.size()
            << ", test " << r.split.test.size() << '\n';
  print_summary(r.report, std::cout);
  std::cout << "latency_ms " << ivp::format_double(r.latency_ms) << " per test example\n";
  if (!cfg.output_dir.empty()) std::cout << "artifacts in " << cfg.output_dir << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Inductive Venn prediction with learned distance metrics"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "generate isotropic Gaussian class data as CSV");
  synth_cmd->add_option("--classes", synth.classes, "number of classes")->capture_default_str();
  synth_cmd->add_option("--dim", synth.dim, "feature dimension")->capture_default_str();
  synth_cmd->add_option("--per-class", synth.per_class, "rows per class")->capture_default_str();
  synth_cmd->add_option("--separation", synth.separation, "distance between class centres")
      ->capture_default_str();
  synth_cmd->add_option("--seed", synth.seed, "generator seed")->capture_default_str();
  synth_cmd->add_flag("--softmax", synth.softmax, "append exact posterior columns s0..");
  synth_cmd->add_option("--out,-o", synth.out, "output CSV (default stdout)");

  ConfigFlags train_flags;
  std::string train_out;
  bool train_classifier = false;
  auto* train_cmd = app.add_subcommand("train", "train a network on the proper-training split");
  train_flags.attach(*train_cmd);
  train_cmd->add_option("--out,-o", train_out, "where to save the network")->required();
  train_cmd->add_flag("--classifier", train_classifier, "train the softmax classifier instead");

  std::string embed_input, embed_model, embed_classifier, embed_out;
  std::uint64_t embed_seed = 0;
  auto* embed_cmd = app.add_subcommand("embed", "map CSV features through a saved network");
  embed_cmd->add_option("--input,-i", embed_input, "CSV to embed")->required();
  embed_cmd->add_option("--model,-m", embed_model, "embedding network (identity when omitted)");
  embed_cmd->add_option("--classifier", embed_classifier, "classifier whose outputs become s0..");
  embed_cmd->add_option("--out,-o", embed_out, "output CSV")->required();
  embed_cmd->add_option("--seed", embed_seed, "accepted for symmetry; embedding is deterministic");

  ConfigFlags calibrate_flags;
  auto* calibrate_cmd =
      app.add_subcommand("calibrate", "split embedded data, fit the taxonomy and count calibration rows");
  calibrate_flags.attach(*calibrate_cmd);

  std::string table_path, reference_path, predict_input, predict_model, predict_out;
  std::uint64_t predict_seed = 0;
  auto* predict_cmd = app.add_subcommand("predict", "probability intervals from a calibration table");
  predict_cmd->add_option("--table,-t", table_path, "calibration table")->required();
  predict_cmd->add_option("--reference,-r", reference_path, "proper-training embeddings CSV");
  predict_cmd->add_option("--input,-i", predict_input, "rows to predict")->required();
  predict_cmd->add_option("--model,-m", predict_model, "embed --input through this network first");
  predict_cmd->add_option("--out,-o", predict_out, "predictions CSV")->required();
  predict_cmd->add_option("--seed", predict_seed, "accepted for symmetry; prediction is deterministic");

  std::string predictions_path, evaluate_dir, evaluate_taxonomy;
  std::size_t bins = ivp::kDefaultBins;
  std::uint64_t evaluate_seed = 0;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "metrics report from a predictions file");
  evaluate_cmd->add_option("--predictions,-p", predictions_path, "predictions CSV")->required();
  evaluate_cmd->add_option("--bins", bins, "ECE/MCE bin count")->capture_default_str();
  evaluate_cmd->add_option("--output-dir", evaluate_dir, "write report.txt and curves.csv here");
  evaluate_cmd->add_option("--taxonomy", evaluate_taxonomy, "label recorded in the report");
  evaluate_cmd->add_option("--seed", evaluate_seed, "accepted for symmetry; evaluation is deterministic");

  std::vector<std::string> report_inputs;
  auto* report_cmd = app.add_subcommand("report", "compare report files or run directories");
  report_cmd->add_option("reports", report_inputs, "report.txt files or run directories")->required();

  ConfigFlags run_flags;
  auto* run_cmd = app.add_subcommand("run", "full pipeline: split, train, calibrate, predict, evaluate");
  run_flags.attach(*run_cmd);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth_cmd) run_synth(synth);
    if (*train_cmd) run_train(train_flags.resolve(), train_out, train_classifier);
    if (*embed_cmd) run_embed(embed_input, embed_model, embed_classifier, embed_out);
    if (*calibrate_cmd) run_calibrate(calibrate_flags.resolve());
    if (*predict_cmd) run_predict(table_path, reference_path, predict_input, predict_model, predict_out);
    if (*evaluate_cmd) run_evaluate(predictions_path, bins, evaluate_dir, evaluate_taxonomy);
    if (*report_cmd) run_report(report_inputs);
    if (*run_cmd) run_all(run_flags.resolve());
  } catch (const ivp::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
