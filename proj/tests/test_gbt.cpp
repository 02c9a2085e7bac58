#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <functional>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "stockhybrid/gbt.hpp"

using namespace stockhybrid;

namespace {

FeatureVector row(std::vector<double> values) {
  std::vector<std::string> names;
  for (std::size_t j = 0; j < values.size(); ++j) names.push_back("f" + std::to_string(j));
  FeatureVector v;
  v.names = names;
  v.values = std::move(values);
  v.schema_id = schema_id_for(names);
  return v;
}

std::vector<FeatureVector> rows(const std::vector<std::vector<double>>& x) {
  std::vector<FeatureVector> out;
  for (const auto& r : x) out.push_back(row(r));
  return out;
}

std::vector<std::vector<double>> random_matrix(std::mt19937_64& rng, std::size_t n, std::size_t p,
                                               double missing_rate = 0.0, int levels = 0) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::uniform_int_distribution<int> level(0, std::max(levels - 1, 0));
  std::bernoulli_distribution gap(missing_rate);
  std::vector<std::vector<double>> x(n, std::vector<double>(p));
  for (auto& r : x) {
    for (auto& v : r) {
      v = levels > 0 ? static_cast<double>(level(rng)) : u(rng);
      if (missing_rate > 0 && gap(rng)) v = kMissing;
    }
  }
  return x;
}

std::vector<double> target(const std::vector<std::vector<double>>& x, std::mt19937_64& rng) {
  std::normal_distribution<double> noise(0.0, 0.3);
  std::vector<double> y;
  for (const auto& r : x) {
    const double a = std::isnan(r[0]) ? 0.5 : r[0];
    const double b = r.size() > 1 && !std::isnan(r[1]) ? r[1] : -0.5;
    y.push_back(2.0 * a - b * b + (a > 0 ? 1.0 : 0.0) + noise(rng));
  }
  return y;
}

double mse(const gbt::TreeEnsemble& e, const std::vector<FeatureVector>& x,
           const std::vector<double>& y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = gbt::predict(e, x[i]) - y[i];
    s += d * d;
  }
  return s / static_cast<double>(x.size());
}

void walk(const gbt::Tree& t, int node, int depth, const std::function<void(int, int)>& visit) {
  visit(node, depth);
  if (!t.nodes[node].leaf()) {
    walk(t, t.nodes[node].left, depth + 1, visit);
    walk(t, t.nodes[node].right, depth + 1, visit);
  }
}

}  // namespace

TEST_CASE("constant target is predicted everywhere") {
  std::mt19937_64 rng(1);
  const auto x = random_matrix(rng, 12, 3);
  const std::vector<double> y(12, 4.25);
  const auto e = gbt::fit(rows(x), y);
  CHECK(e.base_score == 4.25);
  for (const auto& r : random_matrix(rng, 20, 3)) CHECK(gbt::predict(e, row(r)) == 4.25);
}

TEST_CASE("two separable samples decay geometrically") {
  const std::vector<double> y{0.0, 1.0};
  const auto e = gbt::fit(rows({{1.0}, {2.0}}), y);
  CHECK(e.trees.size() == 60);
  const double rel = std::abs(gbt::predict(e, row({2.0})) - 1.0) / 0.5;
  CHECK(rel == doctest::Approx(std::pow(0.9, 60)).epsilon(1e-9));
  CHECK(std::abs(gbt::predict(e, row({1.0})) - 0.0) / 0.5 == doctest::Approx(std::pow(0.9, 60)));
}

TEST_CASE("ten samples match the stage-wise oracle") {
  std::mt19937_64 rng(7);
  const auto x = random_matrix(rng, 10, 3);
  const auto y = target(x, rng);
  const auto e = gbt::fit(rows(x), y);
  const oracle::Booster ref(x, y, {});
  for (const auto& r : x) CHECK(std::abs(gbt::predict(e, row(r)) - ref.predict(r)) < 1e-9);
  for (const auto& r : random_matrix(rng, 50, 3)) {
    CHECK(std::abs(gbt::predict(e, row(r)) - ref.predict(r)) < 1e-9);
  }
}

TEST_CASE("oracle agreement with missing cells and other hyperparameters") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    std::mt19937_64 rng(seed);
    const auto x = random_matrix(rng, 25, 4, 0.2);
    const auto y = target(x, rng);
    gbt::HyperParams hp;
    hp.num_leaves = 5;
    hp.max_depth = 0;
    hp.min_data_in_leaf = 2;
    hp.learning_rate = 0.3;
    hp.nrounds = 15;
    const auto e = gbt::fit(rows(x), y, hp);
    const oracle::Booster ref(x, y, {5, 0, 2, 0.3, 15});
    for (const auto& r : random_matrix(rng, 30, 4, 0.3)) {
      CHECK(std::abs(gbt::predict(e, row(r)) - ref.predict(r)) < 1e-9);
    }
  }
}

TEST_CASE("empty tree list predicts the base score") {
  gbt::TreeEnsemble e;
  e.base_score = 3.5;
  e.feature_names = {"f0"};
  e.schema_id = schema_id_for(e.feature_names);
  CHECK(gbt::predict(e, row({1.0})) == 3.5);
}

TEST_CASE("a fully grown single tree interpolates") {
  std::mt19937_64 rng(3);
  const auto x = random_matrix(rng, 15, 2);
  const auto y = target(x, rng);
  gbt::HyperParams hp;
  hp.num_leaves = 15;
  hp.max_depth = 0;
  hp.learning_rate = 1.0;
  hp.nrounds = 1;
  const auto e = gbt::fit(rows(x), y, hp);
  for (std::size_t i = 0; i < x.size(); ++i) {
    CHECK(gbt::predict(e, row(x[i])) == doctest::Approx(y[i]).epsilon(1e-12));
  }
}

TEST_CASE("an all-missing input follows the missing branches") {
  std::mt19937_64 rng(5);
  const auto x = random_matrix(rng, 30, 3, 0.25);
  const auto y = target(x, rng);
  const auto e = gbt::fit(rows(x), y);
  const auto gap = row({kMissing, kMissing, kMissing});
  const double first = gbt::predict(e, gap);
  CHECK(std::isfinite(first));
  CHECK(gbt::predict(e, gap) == first);
  double expected = e.base_score;
  for (const auto& t : e.trees) {
    int i = 0;
    while (!t.nodes[i].leaf()) i = t.nodes[i].missing_goes_left ? t.nodes[i].left : t.nodes[i].right;
    expected += e.learning_rate * t.nodes[i].value;
  }
  CHECK(first == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("best_split examples") {
  const std::vector<double> y{0, 0, 10, 10};
  const std::vector<std::size_t> all{0, 1, 2, 3};
  const auto x = gbt::Matrix::from_features(rows({{1}, {2}, {3}, {4}}));
  const auto s = gbt::best_split(x, y, all, 0);
  REQUIRE(s);
  CHECK(s->threshold == 2.5);
  CHECK(s->gain == doctest::Approx(100.0));

  const auto flat = gbt::Matrix::from_features(rows({{2}, {2}, {2}, {2}}));
  CHECK_FALSE(gbt::best_split(flat, y, all, 0));

  const std::vector<std::size_t> one{0};
  CHECK_FALSE(gbt::best_split(x, y, one, 0));
  CHECK_FALSE(gbt::best_split(x, y, all, 0, 3));
}

TEST_CASE("best_split equals the exhaustive threshold scan") {
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    std::mt19937_64 rng(seed);
    const std::size_t n = 5 + seed % 20;
    const auto x = random_matrix(rng, n, 1, seed % 3 == 0 ? 0.2 : 0.0, seed % 4 == 0 ? 4 : 0);
    const auto y = target(x, rng);
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), 0);
    const int min_leaf = 1 + static_cast<int>(seed % 3);
    const auto m = gbt::Matrix::from_features(rows(x));
    const auto got = gbt::best_split(m, y, all, 0, min_leaf);
    const auto want = oracle::exhaustive_split(x, y, all, 0, min_leaf);
    REQUIRE(got.has_value() == want.found);
    if (!want.found) continue;
    CHECK(got->gain == doctest::Approx(want.gain).epsilon(1e-9));
    CHECK(got->threshold == doctest::Approx(want.threshold).epsilon(1e-12));
  }
}

TEST_CASE("training loss never increases across rounds") {
  std::mt19937_64 rng(11);
  const auto x = rows(random_matrix(rng, 40, 3, 0.1));
  const auto y = target(random_matrix(rng, 40, 3), rng);
  auto e = gbt::fit(x, y);
  const auto trees = e.trees;
  double previous = INFINITY;
  for (std::size_t m = 0; m <= trees.size(); ++m) {
    e.trees.assign(trees.begin(), trees.begin() + static_cast<long>(m));
    const double loss = mse(e, x, y);
    CHECK(loss <= previous + 1e-12);
    previous = loss;
  }
}

TEST_CASE("trees respect leaf count, depth and leaf caps") {
  for (int cap : {2, 3, 6}) {
    for (int depth : {1, 2, 3}) {
      for (int min_leaf : {1, 3, 5}) {
        std::mt19937_64 rng(100 + cap * 10 + depth + min_leaf);
        const auto x = random_matrix(rng, 37, 3, 0.15);
        const auto y = target(x, rng);
        gbt::HyperParams hp;
        hp.num_leaves = cap;
        hp.max_depth = depth;
        hp.min_data_in_leaf = min_leaf;
        hp.nrounds = 10;
        const auto e = gbt::fit(rows(x), y, hp);
        for (const auto& t : e.trees) {
          CHECK(t.leaves() <= cap);
          CHECK(t.depth() <= depth);
          walk(t, 0, 0, [&](int node, int d) {
            CHECK(d <= depth);
            if (t.nodes[node].leaf()) CHECK(t.nodes[node].count >= min_leaf);
          });
        }
      }
    }
  }
}

TEST_CASE("strictly monotone feature transforms leave training predictions unchanged") {
  std::mt19937_64 rng(13);
  const auto x = random_matrix(rng, 30, 3, 0.1);
  const auto y = target(x, rng);
  auto transform = [](std::vector<std::vector<double>> m) {
    for (auto& r : m) {
      r[0] = std::exp(r[0]);
      r[1] = -std::pow(r[1], 3) + 7.0;
    }
    return m;
  };
  const auto x2 = transform(x);
  const auto e = gbt::fit(rows(x), y);
  const auto e2 = gbt::fit(rows(x2), y);
  for (std::size_t i = 0; i < x.size(); ++i) {
    CHECK(gbt::predict(e2, row(x2[i])) ==
          doctest::Approx(gbt::predict(e, row(x[i]))).epsilon(1e-12));
  }
}

TEST_CASE("fit is deterministic") {
  std::mt19937_64 rng(17);
  const auto x = random_matrix(rng, 30, 3, 0.1);
  const auto y = target(x, rng);
  CHECK(gbt::to_text(gbt::fit(rows(x), y)) == gbt::to_text(gbt::fit(rows(x), y)));
}

TEST_CASE("text format round trips exactly") {
  std::mt19937_64 rng(19);
  const auto x = random_matrix(rng, 30, 3, 0.2);
  const auto y = target(x, rng);
  const auto e = gbt::fit(rows(x), y);
  const auto back = gbt::ensemble_from_text(gbt::to_text(e));
  CHECK(gbt::to_text(back) == gbt::to_text(e));
  for (const auto& r : random_matrix(rng, 20, 3, 0.2)) {
    CHECK(gbt::predict(back, row(r)) == gbt::predict(e, row(r)));
  }
  CHECK_THROWS_AS(gbt::ensemble_from_text("not an ensemble"), Error);
}

TEST_CASE("errors and degenerate inputs") {
  const auto e = gbt::fit(rows({{1.0, 2.0}}), std::vector<double>{3.0});
  CHECK(e.trees.empty());
  CHECK(gbt::predict(e, row({9.0, 9.0})) == 3.0);

  auto code = [](auto&& f) {
    try {
      f();
    } catch (const Error& err) {
      return err.code();
    }
    return ErrorCode::ok;
  };
  CHECK(code([] { gbt::fit(std::vector<FeatureVector>{}, std::vector<double>{}); }) ==
        ErrorCode::insufficient_data);
  CHECK(code([] { gbt::fit(rows({{1.0}, {2.0}}), std::vector<double>{1.0, NAN}); }) ==
        ErrorCode::domain);
  CHECK(code([&] { gbt::predict(e, row({1.0})); }) == ErrorCode::schema);
  gbt::HyperParams bad;
  bad.learning_rate = 0.0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = {};
  bad.nrounds = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
}
