#include <sstream>

#include "doctest.h"
#include "ivp/config.hpp"
#include "ivp/error.hpp"

using namespace ivp;

TEST_CASE("run config defaults") {
  const RunConfig c;
  CHECK(c.test_fraction == 0.10);
  CHECK(c.calibration_fraction == 0.20);
  CHECK(c.bins == 10);
  CHECK(c.taxonomy.k == 5);
  CHECK(c.embedding == EmbeddingSource::Siamese);
  CHECK(c.embedding_dims(115) == std::vector<std::size_t>{115, 10, 32});
  CHECK(c.classifier_dims(115, 4) == std::vector<std::size_t>{115, 10, 4});
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("settings parse and apply") {
  std::istringstream in(
      "# a comment\n"
      "taxonomy = knn_v2\n"
      "k = 7   # trailing comment\n"
      "\n"
      "theta = 0.5\n"
      "embedding = identity\n"
      "hidden_dims = 16,8\n"
      "embedding_dim = 4\n"
      "epochs = 3\n"
      "learning_rate = 0.05\n"
      "seed = 17\n"
      "bins = 15\n"
      "softmax = classifier\n"
      "classifier_hidden_dims = none\n"
      "base_v2_threshold = 0.8\n");
  const auto c = read_run_config(in, "run.cfg");
  CHECK(c.taxonomy.kind == TaxonomyKind::KnnV2);
  CHECK(c.taxonomy.k == 7);
  CHECK(c.taxonomy.theta == 0.5);
  CHECK(c.embedding == EmbeddingSource::Identity);
  CHECK(c.hidden_dims == std::vector<std::size_t>{16, 8});
  CHECK(c.embedding_dims(3) == std::vector<std::size_t>{3, 16, 8, 4});
  CHECK(c.classifier_dims(3, 2) == std::vector<std::size_t>{3, 2});
  CHECK(c.train.epochs == 3);
  CHECK(c.train.learning_rate == 0.05);
  CHECK(c.seed == 17);
  CHECK(c.train_config().seed == 17);
  CHECK(c.split_spec().seed == 17);
  CHECK(c.bins == 15);
  CHECK(c.softmax == SoftmaxSource::Classifier);
  CHECK(c.taxonomy.thresholds.max_output == 0.8);
}

TEST_CASE("config round-trips through its text form") {
  RunConfig c;
  apply_setting(c, "taxonomy", "nc_v2");
  apply_setting(c, "theta", "0.30000000000000004");
  apply_setting(c, "margin", "2.5");
  apply_setting(c, "input", "data/x.csv");
  apply_setting(c, "embedding", "model");
  apply_setting(c, "model", "m.txt");
  std::stringstream buf;
  write_run_config(c, buf);
  const auto back = read_run_config(buf, "buf");
  std::stringstream again;
  write_run_config(back, again);
  std::stringstream first;
  write_run_config(c, first);
  CHECK(again.str() == first.str());
  CHECK(back.taxonomy.theta == 0.1 + 0.2);

  std::size_t lines = 0;
  for (std::string line; std::getline(first, line);) ++lines;
  CHECK(lines == run_config_keys().size());
}

TEST_CASE("theta auto resets to unresolved") {
  RunConfig c;
  apply_setting(c, "theta", "1.5");
  apply_setting(c, "theta", "auto");
  CHECK_FALSE(c.taxonomy.theta.has_value());
}

TEST_CASE("bad settings") {
  RunConfig c;
  CHECK_THROWS_AS(apply_setting(c, "nope", "1"), ConfigError);
  CHECK_THROWS_AS(apply_setting(c, "k", "0"), ConfigError);
  CHECK_THROWS_AS(apply_setting(c, "k", "three"), ConfigError);
  CHECK_THROWS_AS(apply_setting(c, "theta", "-2"), ConfigError);
  CHECK_THROWS_AS(apply_setting(c, "taxonomy", "knn_v9"), ConfigError);
  CHECK_THROWS_AS(apply_setting(c, "hidden_dims", "4,0"), ConfigError);
  CHECK_THROWS_AS(apply_setting(c, "embedding", "pca"), ConfigError);
  CHECK_THROWS_AS(apply_setting(c, "seed", "-1"), ConfigError);

  std::istringstream missing_eq("k = 3\nepochs 5\n");
  try {
    read_run_config(missing_eq, "run.cfg");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  std::istringstream bad_value("\n\nlearning_rate = fast\n");
  try {
    read_run_config(bad_value, "run.cfg");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
  CHECK_THROWS_AS(load_run_config("/nonexistent.cfg"), Error);
}

TEST_CASE("validate catches inconsistent combinations") {
  RunConfig c;
  c.embedding = EmbeddingSource::Model;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = RunConfig{};
  c.bins = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = RunConfig{};
  c.test_fraction = 1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = RunConfig{};
  c.train.margin = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}
