#pragma once

// Exact Shapley attributions for tree ensembles.
//
// The value of a feature coalition S at input x is the expected ensemble
// output when features in S follow x and every other split is averaged
// over its children, weighted by how many background rows reach each
// child. A node that no background row reaches splits its weight evenly.

#include <string>
#include <vector>

#include "stockhybrid/core.hpp"
#include "stockhybrid/gbt.hpp"

namespace stockhybrid::shap {

struct Attribution {
  double base_value = 0.0;
  double prediction = 0.0;
  std::vector<std::string> names;
  std::vector<double> phi;
};

struct Importance {
  std::string feature;
  double mean_abs_phi = 0.0;
};

/// Background rows reaching each node of each tree.
using Covers = std::vector<std::vector<double>>;

Covers background_covers(const gbt::TreeEnsemble& e, const std::vector<FeatureVector>& background);

Attribution tree_shap(const gbt::TreeEnsemble& e, const FeatureVector& x,
                      const std::vector<FeatureVector>& background);
Attribution tree_shap(const gbt::TreeEnsemble& e, const FeatureVector& x, const Covers& covers);

/// Enumerates every coalition. Refuses more than 12 features.
Attribution brute_force_shapley(const gbt::TreeEnsemble& e, const FeatureVector& x,
                                const std::vector<FeatureVector>& background);

/// Mean |phi| per feature, largest first, ties by feature name.
std::vector<Importance> aggregate_importance(const std::vector<Attribution>& attrs);

}  // namespace stockhybrid::shap
