#include "stockhybrid/shap.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

namespace stockhybrid::shap {
namespace {

void check_schema(const gbt::TreeEnsemble& e, const FeatureVector& x) {
  if (x.names != e.feature_names) {
    fail(ErrorCode::schema, "feature schema " + x.schema_id + " does not match ensemble schema " +
                                e.schema_id);
  }
}

bool goes_left(const gbt::TreeNode& n, std::span<const double> x) {
  const double v = x[static_cast<std::size_t>(n.feature)];
  return is_missing(v) ? n.missing_goes_left : v <= n.threshold;
}

/// Share of the parent's background weight carried by `child`.
double fraction(const std::vector<double>& cover, int parent, int child) {
  const double p = cover[static_cast<std::size_t>(parent)];
  return p > 0.0 ? cover[static_cast<std::size_t>(child)] / p : 0.5;
}

/// Expected tree output with no feature fixed.
double expected_output(const gbt::Tree& t, const std::vector<double>& cover, int node) {
  const auto& n = t.nodes[static_cast<std::size_t>(node)];
  if (n.leaf()) return n.value;
  return fraction(cover, node, n.left) * expected_output(t, cover, n.left) +
         fraction(cover, node, n.right) * expected_output(t, cover, n.right);
}

struct PathElement {
  int feature = -1;
  double zero_fraction = 0.0;
  double one_fraction = 0.0;
  double weight = 0.0;
};

void extend(std::vector<PathElement>& path, int depth, double zero, double one, int feature) {
  path[depth] = {feature, zero, one, depth == 0 ? 1.0 : 0.0};
  for (int i = depth - 1; i >= 0; --i) {
    path[i + 1].weight += one * path[i].weight * (i + 1) / (depth + 1);
    path[i].weight = zero * path[i].weight * (depth - i) / (depth + 1);
  }
}

void unwind(std::vector<PathElement>& path, int depth, int index) {
  const double one = path[index].one_fraction;
  const double zero = path[index].zero_fraction;
  double next = path[depth].weight;
  for (int i = depth - 1; i >= 0; --i) {
    if (one != 0.0) {
      const double tmp = path[i].weight;
      path[i].weight = next * (depth + 1) / ((i + 1) * one);
      next = tmp - path[i].weight * zero * (depth - i) / (depth + 1);
    } else {
      path[i].weight = path[i].weight * (depth + 1) / (zero * (depth - i));
    }
  }
  for (int i = index; i < depth; ++i) {
    path[i].feature = path[i + 1].feature;
    path[i].zero_fraction = path[i + 1].zero_fraction;
    path[i].one_fraction = path[i + 1].one_fraction;
  }
}

double unwound_sum(const std::vector<PathElement>& path, int depth, int index) {
  const double one = path[index].one_fraction;
  const double zero = path[index].zero_fraction;
  double next = path[depth].weight;
  double total = 0.0;
  for (int i = depth - 1; i >= 0; --i) {
    if (one != 0.0) {
      const double tmp = next * (depth + 1) / ((i + 1) * one);
      total += tmp;
      next = path[i].weight - tmp * zero * (depth - i) / (depth + 1);
    } else if (zero != 0.0) {
      total += path[i].weight / zero / ((depth - i) / static_cast<double>(depth + 1));
    }
  }
  return total;
}

struct TreeWalk {
  const gbt::Tree& tree;
  const std::vector<double>& cover;
  std::span<const double> x;
  std::vector<double>& phi;
  double scale;

  void recurse(int node, std::vector<PathElement> path, int depth, double zero, double one,
               int feature) {
    path.resize(static_cast<std::size_t>(depth) + 2);
    extend(path, depth, zero, one, feature);
    const auto& n = tree.nodes[static_cast<std::size_t>(node)];
    if (n.leaf()) {
      for (int i = 1; i <= depth; ++i) {
        const double w = unwound_sum(path, depth, i);
        const auto& el = path[static_cast<std::size_t>(i)];
        phi[static_cast<std::size_t>(el.feature)] +=
            scale * w * (el.one_fraction - el.zero_fraction) * n.value;
      }
      return;
    }
    const bool left = goes_left(n, x);
    const int hot = left ? n.left : n.right;
    const int cold = left ? n.right : n.left;
    double incoming_zero = 1.0;
    double incoming_one = 1.0;
    int k = 1;
    for (; k <= depth; ++k) {
      if (path[static_cast<std::size_t>(k)].feature == n.feature) break;
    }
    if (k <= depth) {
      incoming_zero = path[static_cast<std::size_t>(k)].zero_fraction;
      incoming_one = path[static_cast<std::size_t>(k)].one_fraction;
      unwind(path, depth, k);
      --depth;
    }
    const double hot_zero = fraction(cover, node, hot) * incoming_zero;
    const double cold_zero = fraction(cover, node, cold) * incoming_zero;
    // A branch with both fractions zero carries no weight along any ordering.
    if (hot_zero != 0.0 || incoming_one != 0.0) {
      recurse(hot, path, depth + 1, hot_zero, incoming_one, n.feature);
    }
    if (cold_zero != 0.0) recurse(cold, path, depth + 1, cold_zero, 0.0, n.feature);
  }
};

/// Expected tree output with the features in `coalition` fixed to x.
double coalition_value(const gbt::Tree& t, const std::vector<double>& cover,
                       std::span<const double> x, const std::vector<bool>& coalition, int node) {
  const auto& n = t.nodes[static_cast<std::size_t>(node)];
  if (n.leaf()) return n.value;
  if (coalition[static_cast<std::size_t>(n.feature)]) {
    return coalition_value(t, cover, x, coalition, goes_left(n, x) ? n.left : n.right);
  }
  return fraction(cover, node, n.left) * coalition_value(t, cover, x, coalition, n.left) +
         fraction(cover, node, n.right) * coalition_value(t, cover, x, coalition, n.right);
}

double base_value(const gbt::TreeEnsemble& e, const Covers& covers) {
  double sum = 0.0;
  for (std::size_t i = 0; i < e.trees.size(); ++i) {
    sum += expected_output(e.trees[i], covers[i], 0);
  }
  return e.base_score + e.learning_rate * sum;
}

}  // namespace

Covers background_covers(const gbt::TreeEnsemble& e,
                         const std::vector<FeatureVector>& background) {
  if (background.empty()) fail(ErrorCode::invalid_argument, "background set is empty");
  Covers covers;
  for (const auto& t : e.trees) covers.emplace_back(t.nodes.size(), 0.0);
  for (const auto& row : background) {
    check_schema(e, row);
    for (std::size_t i = 0; i < e.trees.size(); ++i) {
      const auto& t = e.trees[i];
      int node = 0;
      for (;;) {
        covers[i][static_cast<std::size_t>(node)] += 1.0;
        const auto& n = t.nodes[static_cast<std::size_t>(node)];
        if (n.leaf()) break;
        node = goes_left(n, row.values) ? n.left : n.right;
      }
    }
  }
  return covers;
}

Attribution tree_shap(const gbt::TreeEnsemble& e, const FeatureVector& x, const Covers& covers) {
  check_schema(e, x);
  if (covers.size() != e.trees.size()) {
    fail(ErrorCode::invalid_argument, "covers do not match the ensemble");
  }
  Attribution a;
  a.names = e.feature_names;
  a.phi.assign(e.feature_count(), 0.0);
  a.prediction = gbt::predict(e, x);
  a.base_value = base_value(e, covers);
  for (std::size_t i = 0; i < e.trees.size(); ++i) {
    TreeWalk walk{e.trees[i], covers[i], x.values, a.phi, e.learning_rate};
    walk.recurse(0, {}, 0, 1.0, 1.0, -1);
  }
  return a;
}

Attribution tree_shap(const gbt::TreeEnsemble& e, const FeatureVector& x,
                      const std::vector<FeatureVector>& background) {
  return tree_shap(e, x, background_covers(e, background));
}

Attribution brute_force_shapley(const gbt::TreeEnsemble& e, const FeatureVector& x,
                                const std::vector<FeatureVector>& background) {
  check_schema(e, x);
  const std::size_t m = e.feature_count();
  if (m > 12) fail(ErrorCode::unsupported, "brute-force Shapley is limited to 12 features");
  const auto covers = background_covers(e, background);

  const std::size_t subsets = std::size_t{1} << m;
  std::vector<double> value(subsets, 0.0);
  std::vector<bool> coalition(m);
  for (std::size_t s = 0; s < subsets; ++s) {
    for (std::size_t j = 0; j < m; ++j) coalition[j] = (s >> j) & 1U;
    double sum = 0.0;
    for (std::size_t i = 0; i < e.trees.size(); ++i) {
      sum += coalition_value(e.trees[i], covers[i], x.values, coalition, 0);
    }
    value[s] = e.base_score + e.learning_rate * sum;
  }

  std::vector<double> factorial(m + 1, 1.0);
  for (std::size_t i = 1; i <= m; ++i) factorial[i] = factorial[i - 1] * static_cast<double>(i);
  Attribution a;
  a.names = e.feature_names;
  a.phi.assign(m, 0.0);
  a.prediction = gbt::predict(e, x);
  a.base_value = value[0];
  for (std::size_t j = 0; j < m; ++j) {
    const std::size_t bit = std::size_t{1} << j;
    for (std::size_t s = 0; s < subsets; ++s) {
      if (s & bit) continue;
      const auto size = static_cast<std::size_t>(std::popcount(s));
      const double w = factorial[size] * factorial[m - size - 1] / factorial[m];
      a.phi[j] += w * (value[s | bit] - value[s]);
    }
  }
  return a;
}

std::vector<Importance> aggregate_importance(const std::vector<Attribution>& attrs) {
  if (attrs.empty()) fail(ErrorCode::invalid_argument, "no attributions to aggregate");
  const auto& names = attrs.front().names;
  std::vector<double> total(names.size(), 0.0);
  for (const auto& a : attrs) {
    if (a.names != names) fail(ErrorCode::schema, "attributions use different feature schemas");
    for (std::size_t j = 0; j < names.size(); ++j) total[j] += std::abs(a.phi[j]);
  }
  std::vector<Importance> out;
  for (std::size_t j = 0; j < names.size(); ++j) {
    out.push_back({names[j], total[j] / static_cast<double>(attrs.size())});
  }
  std::stable_sort(out.begin(), out.end(), [](const Importance& a, const Importance& b) {
    if (a.mean_abs_phi != b.mean_abs_phi) return a.mean_abs_phi > b.mean_abs_phi;
    return a.feature < b.feature;
  });
  return out;
}

}  // namespace stockhybrid::shap
