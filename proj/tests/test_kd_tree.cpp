#include "doctest.h"
#include "ivp/error.hpp"
#include "ivp/kd_tree.hpp"
#include "ivp/random.hpp"
#include "oracles.hpp"

using namespace ivp;

namespace {

std::vector<LabeledEmbedding> random_points(Rng& rng, std::size_t n, std::size_t dim) {
  std::vector<LabeledEmbedding> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i].label = rng.below(4);
    for (std::size_t d = 0; d < dim; ++d) out[i].embedding.push_back(rng.normal());
  }
  return out;
}

void check_against_scan(const std::vector<LabeledEmbedding>& pts, const KdIndex& index,
                        const std::vector<double>& query, std::size_t k) {
  const auto got = index.knn(query, k);
  const auto want = oracle::knn_scan(pts, query, k);
  REQUIRE(got.size() == want.size());
  for (std::size_t i = 0; i < k; ++i) {
    CHECK(got[i].index == want[i].index);
    CHECK(got[i].label == pts[want[i].index].label);
    CHECK(got[i].distance == doctest::Approx(want[i].distance).epsilon(1e-12));
  }
}

}  // namespace

TEST_CASE("kd: single point answers every query") {
  const std::vector<LabeledEmbedding> pts{{{1.0, 2.0}, 3}};
  const auto index = build_index(pts);
  const auto hits = knn(index, std::vector<double>{-5.0, 8.0}, 1);
  REQUIRE(hits.size() == 1);
  CHECK(hits[0].index == 0);
  CHECK(hits[0].label == 3);
  CHECK_THROWS_AS(index.knn(std::vector<double>{0.0, 0.0}, 2), ConfigError);
}

TEST_CASE("kd: query at a stored point returns it at distance zero") {
  Rng rng(1);
  const auto pts = random_points(rng, 300, 5);
  const KdIndex index(pts);
  for (std::size_t i = 0; i < pts.size(); i += 17) {
    const auto hit = index.knn(pts[i].embedding, 1);
    CHECK(hit[0].index == i);
    CHECK(hit[0].distance == 0.0);
  }
}

TEST_CASE("kd: duplicates come before farther points, in insertion order") {
  const std::vector<LabeledEmbedding> pts{
      {{5.0, 5.0}, 0}, {{1.0, 1.0}, 1}, {{0.0, 0.0}, 2}, {{1.0, 1.0}, 3}, {{1.0, 1.0}, 0}};
  const KdIndex index(pts);
  const auto hits = index.knn(std::vector<double>{1.0, 1.0}, 4);
  CHECK(hits[0].index == 1);
  CHECK(hits[1].index == 3);
  CHECK(hits[2].index == 4);
  CHECK(hits[3].index == 2);
}

TEST_CASE("kd: k equal to size returns every point sorted") {
  Rng rng(2);
  const auto pts = random_points(rng, 40, 3);
  const KdIndex index(pts);
  const std::vector<double> q{0.1, 0.2, 0.3};
  check_against_scan(pts, index, q, pts.size());
}

TEST_CASE("kd: matches exhaustive scan on random instances") {
  Rng rng(3);
  for (std::size_t dim : {2u, 32u, 128u}) {
    const auto pts = random_points(rng, 1000, dim);
    const KdIndex index(pts);
    for (int q = 0; q < 30; ++q) {
      std::vector<double> query(dim);
      for (double& x : query) x = rng.normal();
      for (std::size_t k : {1u, 5u, 15u}) check_against_scan(pts, index, query, k);
    }
  }
}

TEST_CASE("kd: exact ties on an integer grid follow insertion order") {
  std::vector<LabeledEmbedding> pts;
  Rng rng(4);
  for (int i = 0; i < 400; ++i)
    pts.push_back({{static_cast<double>(rng.below(5)), static_cast<double>(rng.below(5))}, rng.below(3)});
  const KdIndex index(pts);
  for (int q = 0; q < 50; ++q) {
    const std::vector<double> query{static_cast<double>(rng.below(5)), static_cast<double>(rng.below(5))};
    for (std::size_t k : {1u, 7u, 40u, 400u}) check_against_scan(pts, index, query, k);
  }
}

TEST_CASE("kd: construction is deterministic") {
  Rng rng(5);
  const auto pts = random_points(rng, 200, 4);
  const KdIndex a(pts), b(pts);
  const std::vector<double> q{0.0, 0.5, -0.5, 1.0};
  CHECK(a.knn(q, 10) == b.knn(q, 10));
}

TEST_CASE("kd: error paths") {
  const std::vector<LabeledEmbedding> none;
  CHECK_THROWS_AS(build_index(none), ConfigError);
  const std::vector<LabeledEmbedding> ragged{{{0.0, 1.0}, 0}, {{1.0}, 0}};
  CHECK_THROWS_AS(build_index(ragged), ShapeError);
  const std::vector<LabeledEmbedding> pts{{{0.0, 1.0}, 0}, {{1.0, 0.0}, 1}};
  const KdIndex index(pts);
  CHECK_THROWS_AS(index.knn(std::vector<double>{0.0, 0.0}, 0), ConfigError);
  CHECK_THROWS_AS(index.knn(std::vector<double>{0.0, 0.0}, 3), ConfigError);
  CHECK_THROWS_AS(index.knn(std::vector<double>{0.0}, 1), ShapeError);
}
