#pragma once

// Shared fixtures for the test binaries.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "stockhybrid/gbt.hpp"
#include "stockhybrid/simulator.hpp"

namespace testing {

using namespace stockhybrid;

/// The default cod-like stock with an AR(1) environment that the assessor
/// does not model, loading on recruitment and on the first-quarter survey.
inline sim::SimConfig environment_stock(std::uint64_t seed) {
  auto c = sim::SimConfig::defaults();
  c.environment.enabled = true;
  c.environment.phi = 0.5;
  c.environment.sigma = 1.0;
  c.environment.recruitment_loading = 0.5;
  c.environment.survey_loading = 0.5;
  c.seed = seed;
  return c;
}

/// The default stock, which the assessor specifies correctly.
inline sim::SimConfig plain_stock(std::uint64_t seed) {
  auto c = sim::SimConfig::defaults();
  c.seed = seed;
  return c;
}

inline sim::SimConfig noise_free_stock() {
  auto c = sim::SimConfig::defaults();
  c.process_sigma = 0.0;
  c.recruitment_sigma = 0.0;
  c.f_sigma = 0.0;
  for (auto& f : c.fleets) f.obs_sigma = 0.0;
  return c;
}

inline BiologySeries flat_biology(AgeRange ages, int first, int last, double w, double mat,
                                  double m) {
  BiologySeries bio(ages, first, last);
  for (int y = first; y <= last; ++y) {
    for (auto& v : bio.weight(y)) v = w;
    for (auto& v : bio.maturity(y)) v = mat;
    for (auto& v : bio.natural_mortality(y)) v = m;
  }
  return bio;
}

inline bool close(double a, double b, double tol) { return std::abs(a - b) <= tol; }

inline FeatureVector feature_row(std::vector<double> values) {
  FeatureVector v;
  for (std::size_t j = 0; j < values.size(); ++j) v.names.push_back("f" + std::to_string(j));
  v.values = std::move(values);
  v.schema_id = schema_id_for(v.names);
  return v;
}

/// Random ensemble over `features` columns with trees no deeper than
/// `max_depth`. Thresholds are drawn from a small grid so that background
/// rows and inputs land on both sides and occasionally on the threshold.
inline gbt::TreeEnsemble random_ensemble(std::mt19937_64& rng, std::size_t features, int max_depth,
                                         int trees) {
  std::uniform_int_distribution<std::size_t> pick(0, features - 1);
  std::uniform_int_distribution<int> grid(-4, 4);
  std::uniform_real_distribution<double> value(-3.0, 3.0);
  std::bernoulli_distribution coin(0.5);
  std::bernoulli_distribution deeper(0.7);
  gbt::TreeEnsemble e;
  e.base_score = value(rng);
  e.learning_rate = 0.1 * (1 + static_cast<int>(pick(rng)));
  for (std::size_t j = 0; j < features; ++j) e.feature_names.push_back("f" + std::to_string(j));
  e.schema_id = schema_id_for(e.feature_names);
  for (int t = 0; t < trees; ++t) {
    gbt::Tree tree;
    tree.nodes.emplace_back();
    std::vector<std::pair<int, int>> pending{{0, 0}};
    while (!pending.empty()) {
      const auto [node, depth] = pending.back();
      pending.pop_back();
      if (depth >= max_depth || (depth > 0 && !deeper(rng))) {
        tree.nodes[node].value = value(rng);
        continue;
      }
      const int left = static_cast<int>(tree.nodes.size());
      auto& n = tree.nodes[node];
      n.feature = static_cast<int>(pick(rng));
      n.threshold = 0.5 * grid(rng);
      n.missing_goes_left = coin(rng);
      n.left = left;
      n.right = left + 1;
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();
      pending.push_back({left, depth + 1});
      pending.push_back({left + 1, depth + 1});
    }
    e.trees.push_back(std::move(tree));
  }
  return e;
}

/// Values on the threshold grid of random_ensemble, with some gaps.
inline std::vector<double> random_input(std::mt19937_64& rng, std::size_t features,
                                        double missing_rate) {
  std::uniform_int_distribution<int> grid(-9, 9);
  std::bernoulli_distribution gap(missing_rate);
  std::vector<double> x(features);
  for (auto& v : x) v = gap(rng) ? kMissing : 0.25 * grid(rng);
  return x;
}

}  // namespace testing
