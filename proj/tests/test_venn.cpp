#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "doctest.h"
#include "ivp/error.hpp"
#include "ivp/random.hpp"
#include "ivp/venn.hpp"

using namespace ivp;
using TK = TaxonomyKind;

namespace {

TaxonomyConfig nc_config(std::size_t c) {
  TaxonomyConfig cfg;
  cfg.kind = TK::NcV1;
  cfg.class_count = c;
  return cfg;
}

TaxonomyConfig knn2_config(std::size_t c, std::size_t k) {
  TaxonomyConfig cfg;
  cfg.kind = TK::KnnV2;
  cfg.class_count = c;
  cfg.k = k;
  return cfg;
}

}  // namespace

TEST_CASE("calibrate: counting in one category") {
  TaxonomyConfig cfg;
  cfg.kind = TK::NcV2;
  cfg.class_count = 4;
  cfg.theta = 100.0;
  // Category 7 = class 3 with h = 1: beyond theta from centroid 3.
  const std::vector<LabeledEmbedding> proper{{{0.0}, 0}, {{1.0}, 1}, {{2.0}, 2}, {{1000.0}, 3}};
  const auto taxonomy = Taxonomy::fit(cfg, proper);
  const std::vector<double> far{2000.0};
  const std::vector<LabeledInput> set{{{far, {}}, 0}, {{far, {}}, 0}, {{far, {}}, 1}, {{far, {}}, 0}};
  const auto table = calibrate(set, taxonomy);
  CHECK(table.counts({7}) == std::vector<std::size_t>{3, 1, 0, 0});
  CHECK(table.total({7}) == 4);
  CHECK(table.entries().size() == 1);
  CHECK(table.calibration_size == 4);
}

TEST_CASE("calibrate: empty set gives an empty table") {
  const std::vector<LabeledEmbedding> proper{{{0.0}, 0}, {{1.0}, 1}};
  const auto taxonomy = Taxonomy::fit(nc_config(2), proper);
  const auto table = calibrate({}, taxonomy);
  CHECK(table.entries().empty());
  const auto p = predict(table, taxonomy, {std::vector<double>{0.0}, {}});
  CHECK(p.uninformative);
  CHECK(p.predicted_class == 0);
  for (const auto& iv : p.intervals) {
    CHECK(iv.lower == 0.0);
    CHECK(iv.upper == 1.0);
  }
}

TEST_CASE("calibrate is independent of input order") {
  Rng rng(5);
  std::vector<LabeledEmbedding> proper;
  for (std::size_t i = 0; i < 60; ++i) proper.push_back({{rng.normal() + double(i % 3), rng.normal()}, i % 3});
  const auto taxonomy = Taxonomy::fit(knn2_config(3, 5), proper);
  std::vector<std::vector<double>> xs;
  for (int i = 0; i < 200; ++i) xs.push_back({1.5 * rng.normal(), rng.normal()});
  std::vector<LabeledInput> set;
  for (const auto& x : xs) set.push_back({{x, {}}, rng.below(3)});
  const auto a = calibrate(set, taxonomy);
  rng.shuffle(std::span<LabeledInput>(set));
  const auto b = calibrate(set, taxonomy);
  CHECK(a == b);
  const std::vector<double> q{0.2, -0.3};
  const auto pa = predict(a, taxonomy, {q, {}});
  const auto pb = predict(b, taxonomy, {q, {}});
  CHECK(pa.intervals == pb.intervals);
  CHECK(pa.predicted_class == pb.predicted_class);
}

TEST_CASE("intervals examples") {
  CalibrationTable table(nc_config(3));
  table.add({0}, 0, 3);
  table.add({0}, 1, 1);
  auto iv = intervals(table, {0});
  CHECK(iv[0].lower == 0.6);
  CHECK(iv[0].upper == 0.8);
  CHECK(iv[2].lower == 0.0);
  CHECK(iv[2].upper == 0.2);
  CHECK(iv[1].hits == 1);
  CHECK(iv[1].total == 4);

  iv = intervals(table, {1});
  for (const auto& i : iv) CHECK((i.lower == 0.0 && i.upper == 1.0 && i.total == 0));

  table.add({2}, 2, 9);
  iv = intervals(table, {2});
  CHECK(iv[2].lower == 0.9);
  CHECK(iv[2].upper == 1.0);
  CHECK(iv[0].upper == 0.1);

  CHECK_THROWS_AS(intervals(table, {3}), ConfigError);
}

TEST_CASE("predict_category examples") {
  CalibrationTable table(nc_config(3));
  table.add({0}, 0, 3);
  table.add({0}, 1, 1);
  auto p = predict_category(table, {{0}, false});
  CHECK(p.predicted_class == 0);
  CHECK(p.predicted_interval().lower == 0.6);
  CHECK(p.predicted_interval().upper == 0.8);
  CHECK_FALSE(p.uninformative);

  p = predict_category(table, {{1}, false});
  CHECK(p.predicted_class == 0);
  CHECK(p.uninformative);
  CHECK(p.means() == std::vector<double>{0.5, 0.5, 0.5});

  CalibrationTable tied(nc_config(2));
  tied.add({1}, 0, 2);
  tied.add({1}, 1, 2);
  p = predict_category(tied, {{1}, true});
  CHECK(p.means()[0] == p.means()[1]);
  CHECK(p.predicted_class == 0);
  CHECK(p.clamped);

  CalibrationTable later(nc_config(3));
  later.add({2}, 0, 1);
  later.add({2}, 2, 4);
  CHECK(predict_category(later, {{2}, false}).predicted_class == 2);
}

TEST_CASE("width law and sum bounds on random tables") {
  Rng rng(9);
  for (int t = 0; t < 2000; ++t) {
    const std::size_t c = 2 + rng.below(6);
    CalibrationTable table(nc_config(c));
    for (ClassIndex j = 0; j < c; ++j)
      if (rng.below(3)) table.add({0}, j, rng.below(1000));
    const auto p = predict_category(table, {{0}, false});
    const std::size_t total = table.total({0});
    double sum_lower = 0.0, sum_upper = 0.0;
    std::size_t sum_hits = 0;
    for (const auto& iv : p.intervals) {
      CHECK(iv.total == total);
      CHECK(iv.lower == double(iv.hits) / double(total + 1));
      CHECK(iv.upper == double(iv.hits + 1) / double(total + 1));
      CHECK(std::abs(iv.width() - 1.0 / double(total + 1)) <= 4 * std::numeric_limits<double>::epsilon());
      CHECK(0.0 <= iv.lower);
      CHECK(iv.lower <= iv.upper);
      CHECK(iv.upper <= 1.0);
      sum_lower += iv.lower;
      sum_upper += iv.upper;
      sum_hits += iv.hits;
    }
    CHECK(sum_hits == total);
    CHECK(sum_lower <= 1.0 + 1e-12);
    CHECK(sum_upper >= 1.0 - 1e-12);
    const auto means = p.means();
    CHECK(p.predicted_class == std::size_t(std::max_element(means.begin(), means.end()) - means.begin()));
  }
}

TEST_CASE("adding a class-j example never lowers L(Y_j)") {
  Rng rng(10);
  for (int t = 0; t < 500; ++t) {
    CalibrationTable table(nc_config(3));
    for (ClassIndex j = 0; j < 3; ++j) table.add({1}, j, rng.below(20));
    const ClassIndex j = rng.below(3);
    const double before = intervals(table, {1})[j].lower;
    table.add({1}, j);
    CHECK(intervals(table, {1})[j].lower >= before);
  }
}

TEST_CASE("predict rejects a mismatched taxonomy") {
  const std::vector<LabeledEmbedding> proper{{{0.0}, 0}, {{1.0}, 1}};
  const auto nc = Taxonomy::fit(nc_config(2), proper);
  auto knn_cfg = nc_config(2);
  knn_cfg.kind = TK::KnnV1;
  knn_cfg.k = 1;
  const auto knn = Taxonomy::fit(knn_cfg, proper);
  const CalibrationTable table(nc_config(2));
  CHECK_THROWS_AS(predict(table, knn, {std::vector<double>{0.0}, {}}), ConfigError);
  CHECK_NOTHROW(predict(table, nc, {std::vector<double>{0.0}, {}}));
}

TEST_CASE("table add rejects out-of-range categories and labels") {
  CalibrationTable table(nc_config(2));
  CHECK_THROWS_AS(table.add({2}, 0), ConfigError);
  CHECK_THROWS_AS(table.add({0}, 2), ConfigError);
}

TEST_CASE("table persistence round-trips exactly") {
  Rng rng(12);
  for (TK kind : kAllTaxonomies) {
    TaxonomyConfig cfg;
    cfg.kind = kind;
    cfg.class_count = 3;
    cfg.k = 7;
    if (kind == TK::NcV2) cfg.theta = 0.1 + 0.2;
    cfg.thresholds = {0.7, 1.0 / 3.0, 0.45};
    CalibrationTable table(cfg);
    for (int i = 0; i < 50; ++i) table.add({rng.below(cfg.category_count())}, rng.below(3), 1 + rng.below(4));
    table.proper_training_size = 1234;
    table.calibration_size = 321;
    std::stringstream buf;
    save(table, buf);
    const auto back = load_table(buf);
    CHECK(back == table);
    std::stringstream again;
    save(back, again);
    std::stringstream first;
    save(table, first);
    CHECK(again.str() == first.str());
  }
}

TEST_CASE("table persistence rejects malformed input") {
  std::stringstream truncated("ivp-table 1\ntaxonomy nc_v1\nclasses 2\n");
  CHECK_THROWS_AS(load_table(truncated), ParseError);
  std::stringstream bad_kind("ivp-table 1\ntaxonomy nope\n");
  CHECK_THROWS_AS(load_table(bad_kind), ParseError);
  std::stringstream out_of_range(
      "ivp-table 1\ntaxonomy nc_v1\nclasses 2\nk 5\ntheta none\nthresholds 0.75 0.25 0.5\n"
      "proper_training 1\ncalibration 1\nentries 1\n5 0 1\nend\n");
  CHECK_THROWS_AS(load_table(out_of_range), ParseError);
}
