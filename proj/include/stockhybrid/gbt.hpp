#pragma once

// Gradient-boosted regression trees with squared-error loss.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stockhybrid/core.hpp"

namespace stockhybrid::gbt {

struct HyperParams {
  int num_leaves = 3;
  int max_depth = 3;  // <= 0 means unlimited
  int min_data_in_leaf = 1;
  double learning_rate = 0.1;
  int nrounds = 60;

  void validate() const;
  friend bool operator==(const HyperParams&, const HyperParams&) = default;
};

/// Flat node storage; the root is node 0. A leaf has feature == -1.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  bool missing_goes_left = true;
  int left = -1;
  int right = -1;
  double value = 0.0;  // leaves only
  int count = 0;       // training rows reaching the node

  bool leaf() const { return feature < 0; }
};

struct Tree {
  std::vector<TreeNode> nodes;

  /// Index of the leaf that `row` is routed to.
  int leaf_index(std::span<const double> row) const;
  double predict(std::span<const double> row) const { return nodes[leaf_index(row)].value; }
  int depth() const;
  int leaves() const;
};

struct TreeEnsemble {
  double base_score = 0.0;
  double learning_rate = 0.1;
  std::vector<std::string> feature_names;
  std::string schema_id;
  std::vector<Tree> trees;

  std::size_t feature_count() const { return feature_names.size(); }
};

/// Column-major view of a training matrix with one target per row.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;  // data[col * rows + row]

  double at(std::size_t row, std::size_t col) const { return data[col * rows + row]; }
  std::vector<double> row(std::size_t r) const;
  static Matrix from_features(const std::vector<FeatureVector>& x);
};

struct Split {
  double threshold = 0.0;
  double gain = 0.0;
  bool missing_goes_left = true;
};

/// Best threshold for one feature over the given rows of `x` with targets
/// `y` (indexed by row). A row is sent left when value <= threshold.
std::optional<Split> best_split(const Matrix& x, std::span<const double> y,
                                std::span<const std::size_t> rows, std::size_t feature,
                                int min_data_in_leaf = 1);

TreeEnsemble fit(const std::vector<FeatureVector>& x, std::span<const double> y,
                 const HyperParams& hp = {});
TreeEnsemble fit(const Matrix& x, std::span<const double> y,
                 const std::vector<std::string>& feature_names, const HyperParams& hp = {});

double predict(const TreeEnsemble& e, const FeatureVector& x);
double predict_row(const TreeEnsemble& e, std::span<const double> row);

std::string to_text(const TreeEnsemble& e);
TreeEnsemble ensemble_from_text(const std::string& text);

}  // namespace stockhybrid::gbt
