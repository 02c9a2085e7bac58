#include "stockhybrid/gbt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace stockhybrid::gbt {

void HyperParams::validate() const {
  if (num_leaves < 1) fail(ErrorCode::config, "num_leaves must be >= 1");
  if (min_data_in_leaf < 1) fail(ErrorCode::config, "min_data_in_leaf must be >= 1");
  if (!(learning_rate > 0.0 && learning_rate <= 1.0)) {
    fail(ErrorCode::config, "learning_rate must lie in (0, 1]");
  }
  if (nrounds < 1) fail(ErrorCode::config, "nrounds must be >= 1");
}

int Tree::leaf_index(std::span<const double> row) const {
  int i = 0;
  while (!nodes[i].leaf()) {
    const auto& n = nodes[i];
    const double v = row[static_cast<std::size_t>(n.feature)];
    const bool left = is_missing(v) ? n.missing_goes_left : v <= n.threshold;
    i = left ? n.left : n.right;
  }
  return i;
}

int Tree::depth() const {
  std::vector<int> d(nodes.size(), 0);
  int deepest = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].leaf()) {
      deepest = std::max(deepest, d[i]);
      continue;
    }
    d[nodes[i].left] = d[i] + 1;
    d[nodes[i].right] = d[i] + 1;
  }
  return deepest;
}

int Tree::leaves() const {
  return static_cast<int>(std::count_if(nodes.begin(), nodes.end(),
                                        [](const TreeNode& n) { return n.leaf(); }));
}

std::vector<double> Matrix::row(std::size_t r) const {
  std::vector<double> out(cols);
  for (std::size_t c = 0; c < cols; ++c) out[c] = at(r, c);
  return out;
}

Matrix Matrix::from_features(const std::vector<FeatureVector>& x) {
  Matrix m;
  m.rows = x.size();
  m.cols = x.empty() ? 0 : x.front().size();
  m.data.resize(m.rows * m.cols);
  for (std::size_t r = 0; r < x.size(); ++r) {
    if (x[r].names != x.front().names || x[r].size() != m.cols) {
      fail(ErrorCode::schema, "training rows do not share one feature schema");
    }
    for (std::size_t c = 0; c < m.cols; ++c) m.data[c * m.rows + r] = x[r].values[c];
  }
  return m;
}

namespace {

// Gains within rounding of each other are ties, kept by the earlier candidate.
bool beats(double gain, double incumbent) { return gain > incumbent * (1.0 + 1e-9); }

}  // namespace

std::optional<Split> best_split(const Matrix& x, std::span<const double> y,
                                std::span<const std::size_t> rows, std::size_t feature,
                                int min_data_in_leaf) {
  if (rows.size() < 2) return std::nullopt;
  const auto n = static_cast<double>(rows.size());
  double total = 0.0;
  for (auto r : rows) total += y[r];
  const double mean = total / n;
  double parent_sse = 0.0;
  for (auto r : rows) parent_sse += (y[r] - mean) * (y[r] - mean);
  if (!(parent_sse > 0.0)) return std::nullopt;

  std::vector<std::size_t> present;
  double missing_sum = 0.0;
  std::size_t missing_count = 0;
  for (auto r : rows) {
    if (is_missing(x.at(r, feature))) {
      missing_sum += y[r];
      ++missing_count;
    } else {
      present.push_back(r);
    }
  }
  std::stable_sort(present.begin(), present.end(), [&](std::size_t a, std::size_t b) {
    return x.at(a, feature) < x.at(b, feature);
  });

  const auto min_leaf = static_cast<std::size_t>(std::max(1, min_data_in_leaf));
  std::optional<Split> best;
  auto consider = [&](double thr, double sum_l, std::size_t n_l, bool missing_left) {
    const std::size_t n_r = rows.size() - n_l;
    if (n_l < min_leaf || n_r < min_leaf) return;
    const double nl = static_cast<double>(n_l);
    const double nr = static_cast<double>(n_r);
    const double diff = sum_l / nl - (total - sum_l) / nr;
    const double gain = nl * nr / n * diff * diff;
    // Gains below rounding noise of the parent are not real structure.
    if (!(gain > 1e-12 * parent_sse)) return;
    if (!best || beats(gain, best->gain)) best = Split{thr, gain, missing_left};
  };

  double run_sum = 0.0;
  for (std::size_t i = 0; i + 1 < present.size(); ++i) {
    run_sum += y[present[i]];
    const double a = x.at(present[i], feature);
    const double b = x.at(present[i + 1], feature);
    if (!(a < b)) continue;
    double thr = a + (b - a) / 2.0;
    if (thr >= b) thr = a;
    consider(thr, run_sum + missing_sum, i + 1 + missing_count, true);
    if (missing_count > 0) consider(thr, run_sum, i + 1, false);
  }
  return best;
}

namespace {

struct Candidate {
  int node = 0;
  int depth = 0;
  std::vector<std::size_t> rows;
  std::optional<Split> split;
  std::size_t feature = 0;
};

void find_split(Candidate& c, const Matrix& x, std::span<const double> r, const HyperParams& hp) {
  c.split.reset();
  if (hp.max_depth > 0 && c.depth >= hp.max_depth) return;
  for (std::size_t f = 0; f < x.cols; ++f) {
    auto s = best_split(x, r, c.rows, f, hp.min_data_in_leaf);
    if (s && (!c.split || beats(s->gain, c.split->gain))) {
      c.split = s;
      c.feature = f;
    }
  }
}

Tree grow_tree(const Matrix& x, std::span<const double> r, const HyperParams& hp) {
  Tree tree;
  tree.nodes.emplace_back();
  std::vector<Candidate> open(1);
  open[0].rows.resize(x.rows);
  std::iota(open[0].rows.begin(), open[0].rows.end(), std::size_t{0});
  find_split(open[0], x, r, hp);

  int leaves = 1;
  while (leaves < hp.num_leaves) {
    int pick = -1;
    for (std::size_t i = 0; i < open.size(); ++i) {
      if (!open[i].split) continue;
      if (pick < 0 || beats(open[i].split->gain, open[pick].split->gain)) pick = static_cast<int>(i);
    }
    if (pick < 0) break;
    Candidate c = std::move(open[static_cast<std::size_t>(pick)]);
    open.erase(open.begin() + pick);

    Candidate left, right;
    for (auto row : c.rows) {
      const double v = x.at(row, c.feature);
      const bool go_left = is_missing(v) ? c.split->missing_goes_left : v <= c.split->threshold;
      (go_left ? left : right).rows.push_back(row);
    }
    auto& node = tree.nodes[static_cast<std::size_t>(c.node)];
    node.feature = static_cast<int>(c.feature);
    node.threshold = c.split->threshold;
    node.missing_goes_left = c.split->missing_goes_left;
    node.left = static_cast<int>(tree.nodes.size());
    node.right = node.left + 1;
    left.node = node.left;
    right.node = node.right;
    left.depth = right.depth = c.depth + 1;
    tree.nodes.emplace_back();
    tree.nodes.emplace_back();
    find_split(left, x, r, hp);
    find_split(right, x, r, hp);
    open.push_back(std::move(left));
    open.push_back(std::move(right));
    ++leaves;
  }

  for (const auto& c : open) {
    double sum = 0.0;
    for (auto row : c.rows) sum += r[row];
    auto& leaf = tree.nodes[static_cast<std::size_t>(c.node)];
    leaf.value = c.rows.empty() ? 0.0 : sum / static_cast<double>(c.rows.size());
  }
  // Row counts for every node, leaves and splits alike.
  for (std::size_t row = 0; row < x.rows; ++row) {
    const auto values = x.row(row);
    int i = 0;
    for (;;) {
      auto& n = tree.nodes[static_cast<std::size_t>(i)];
      ++n.count;
      if (n.leaf()) break;
      const double v = values[static_cast<std::size_t>(n.feature)];
      i = (is_missing(v) ? n.missing_goes_left : v <= n.threshold) ? n.left : n.right;
    }
  }
  return tree;
}

}  // namespace

TreeEnsemble fit(const Matrix& x, std::span<const double> y,
                 const std::vector<std::string>& feature_names, const HyperParams& hp) {
  hp.validate();
  if (x.rows == 0) fail(ErrorCode::insufficient_data, "cannot fit trees to an empty data set");
  if (y.size() != x.rows) fail(ErrorCode::invalid_argument, "feature rows and targets differ");
  if (feature_names.size() != x.cols) {
    fail(ErrorCode::schema, "feature names do not match the matrix width");
  }
  for (double v : y) {
    if (!std::isfinite(v)) fail(ErrorCode::domain, "training targets must be finite");
  }

  TreeEnsemble e;
  e.learning_rate = hp.learning_rate;
  e.feature_names = feature_names;
  e.schema_id = schema_id_for(feature_names);
  e.base_score = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  if (x.rows == 1) return e;

  std::vector<double> pred(x.rows, e.base_score);
  std::vector<double> residual(x.rows);
  std::vector<std::vector<double>> rows(x.rows);
  for (std::size_t r = 0; r < x.rows; ++r) rows[r] = x.row(r);
  for (int round = 0; round < hp.nrounds; ++round) {
    for (std::size_t r = 0; r < x.rows; ++r) residual[r] = y[r] - pred[r];
    Tree tree = grow_tree(x, residual, hp);
    for (std::size_t r = 0; r < x.rows; ++r) pred[r] += hp.learning_rate * tree.predict(rows[r]);
    e.trees.push_back(std::move(tree));
  }
  return e;
}

TreeEnsemble fit(const std::vector<FeatureVector>& x, std::span<const double> y,
                 const HyperParams& hp) {
  if (x.empty()) fail(ErrorCode::insufficient_data, "cannot fit trees to an empty data set");
  return fit(Matrix::from_features(x), y, x.front().names, hp);
}

double predict_row(const TreeEnsemble& e, std::span<const double> row) {
  if (row.size() != e.feature_count()) {
    fail(ErrorCode::schema, "feature vector width does not match the ensemble");
  }
  double sum = 0.0;
  for (const auto& t : e.trees) sum += t.predict(row);
  return e.base_score + e.learning_rate * sum;
}

double predict(const TreeEnsemble& e, const FeatureVector& x) {
  if (x.names != e.feature_names) {
    fail(ErrorCode::schema, "feature schema " + x.schema_id + " does not match ensemble schema " +
                                e.schema_id);
  }
  return predict_row(e, x.values);
}

}  // namespace stockhybrid::gbt
