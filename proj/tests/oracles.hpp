#pragma once

// Reference implementations used as test oracles.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <set>
#include <vector>

#include "stockhybrid/gbt.hpp"

namespace oracle {

inline bool missing(double v) { return std::isnan(v); }

inline double sse(const std::vector<double>& y, const std::vector<std::size_t>& rows) {
  if (rows.empty()) return 0.0;
  double mean = 0.0;
  for (auto r : rows) mean += y[r];
  mean /= static_cast<double>(rows.size());
  double s = 0.0;
  for (auto r : rows) s += (y[r] - mean) * (y[r] - mean);
  return s;
}

struct Cut {
  bool found = false;
  std::size_t feature = 0;
  double threshold = 0.0;
  bool missing_left = true;
  double gain = 0.0;
};

/// Every midpoint threshold and both missing directions, with the gain taken
/// as parent SSE minus the two children's SSE.
inline Cut exhaustive_split(const std::vector<std::vector<double>>& x, const std::vector<double>& y,
                            const std::vector<std::size_t>& rows, std::size_t feature,
                            std::size_t min_leaf) {
  Cut best;
  const double parent = sse(y, rows);
  if (!(parent > 0.0)) return best;
  std::set<double> values;
  for (auto r : rows) {
    if (!missing(x[r][feature])) values.insert(x[r][feature]);
  }
  std::vector<double> sorted(values.begin(), values.end());
  for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
    const double thr = (sorted[i] + sorted[i + 1]) / 2.0;
    for (bool missing_left : {true, false}) {
      std::vector<std::size_t> left, right;
      for (auto r : rows) {
        const double v = x[r][feature];
        const bool go_left = missing(v) ? missing_left : v <= thr;
        (go_left ? left : right).push_back(r);
      }
      if (left.size() < min_leaf || right.size() < min_leaf) continue;
      const double gain = parent - sse(y, left) - sse(y, right);
      if (!(gain > 1e-12 * parent)) continue;
      if (!best.found || gain > best.gain * (1 + 1e-9)) {
        best = {true, feature, thr, missing_left, gain};
      }
    }
  }
  return best;
}

struct Params {
  int num_leaves = 3;
  int max_depth = 3;
  std::size_t min_leaf = 1;
  double learning_rate = 0.1;
  int rounds = 60;
};

/// Stage-wise L2 boosting with best-first trees, written out directly.
class Booster {
 public:
  Booster(const std::vector<std::vector<double>>& x, const std::vector<double>& y, Params p)
      : p_(p) {
    base_ = 0.0;
    for (double v : y) base_ += v;
    base_ /= static_cast<double>(y.size());
    if (y.size() < 2) return;
    std::vector<double> fitted(y.size(), base_);
    for (int round = 0; round < p.rounds; ++round) {
      std::vector<double> residual(y.size());
      for (std::size_t i = 0; i < y.size(); ++i) residual[i] = y[i] - fitted[i];
      trees_.push_back(grow(x, residual));
      for (std::size_t i = 0; i < y.size(); ++i) {
        fitted[i] += p.learning_rate * evaluate(trees_.back(), x[i]);
      }
    }
  }

  double predict(const std::vector<double>& row) const {
    double s = base_;
    for (const auto& t : trees_) s += p_.learning_rate * evaluate(t, row);
    return s;
  }

 private:
  struct Node {
    bool leaf = true;
    std::size_t feature = 0;
    double threshold = 0.0;
    bool missing_left = true;
    int left = -1, right = -1;
    double value = 0.0;
  };
  using Tree = std::vector<Node>;

  static double evaluate(const Tree& t, const std::vector<double>& row) {
    int i = 0;
    while (!t[i].leaf) {
      const double v = row[t[i].feature];
      i = (missing(v) ? t[i].missing_left : v <= t[i].threshold) ? t[i].left : t[i].right;
    }
    return t[i].value;
  }

  Cut best_cut(const std::vector<std::vector<double>>& x, const std::vector<double>& r,
               const std::vector<std::size_t>& rows, int depth) const {
    Cut best;
    if (p_.max_depth > 0 && depth >= p_.max_depth) return best;
    for (std::size_t f = 0; f < x[0].size(); ++f) {
      const auto c = exhaustive_split(x, r, rows, f, p_.min_leaf);
      if (c.found && (!best.found || c.gain > best.gain * (1 + 1e-9))) best = c;
    }
    return best;
  }

  Tree grow(const std::vector<std::vector<double>>& x, const std::vector<double>& r) const {
    struct Open {
      int node;
      int depth;
      std::vector<std::size_t> rows;
      Cut cut;
    };
    Tree tree(1);
    std::vector<std::size_t> all(x.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    std::vector<Open> open{{0, 0, all, best_cut(x, r, all, 0)}};
    for (int leaves = 1; leaves < p_.num_leaves; ++leaves) {
      int pick = -1;
      for (std::size_t i = 0; i < open.size(); ++i) {
        if (open[i].cut.found &&
            (pick < 0 || open[i].cut.gain > open[pick].cut.gain * (1 + 1e-9))) {
          pick = static_cast<int>(i);
        }
      }
      if (pick < 0) break;
      Open o = open[pick];
      open.erase(open.begin() + pick);
      std::vector<std::size_t> left, right;
      for (auto row : o.rows) {
        const double v = x[row][o.cut.feature];
        const bool go_left = missing(v) ? o.cut.missing_left : v <= o.cut.threshold;
        (go_left ? left : right).push_back(row);
      }
      Node& n = tree[o.node];
      n.leaf = false;
      n.feature = o.cut.feature;
      n.threshold = o.cut.threshold;
      n.missing_left = o.cut.missing_left;
      n.left = static_cast<int>(tree.size());
      n.right = n.left + 1;
      const int l = n.left, rr = n.right;
      tree.emplace_back();
      tree.emplace_back();
      open.push_back({l, o.depth + 1, left, best_cut(x, r, left, o.depth + 1)});
      open.push_back({rr, o.depth + 1, right, best_cut(x, r, right, o.depth + 1)});
    }
    for (const auto& o : open) {
      double s = 0.0;
      for (auto row : o.rows) s += r[row];
      tree[o.node].value = o.rows.empty() ? 0.0 : s / static_cast<double>(o.rows.size());
    }
    return tree;
  }

  Params p_;
  double base_ = 0.0;
  std::vector<Tree> trees_;
};

/// Expected ensemble output when the features flagged in `known` follow `x`
/// and every other split averages its children by background occupancy.
inline double coalition_value(const stockhybrid::gbt::TreeEnsemble& e, const std::vector<double>& x,
                              const std::vector<bool>& known,
                              const std::vector<std::vector<double>>& background) {
  double total = e.base_score;
  for (const auto& tree : e.trees) {
    std::vector<double> reach(tree.nodes.size(), 0.0);
    for (const auto& b : background) {
      int i = 0;
      reach[0] += 1.0;
      while (!tree.nodes[i].leaf()) {
        const auto& n = tree.nodes[i];
        const double v = b[n.feature];
        i = (missing(v) ? n.missing_goes_left : v <= n.threshold) ? n.left : n.right;
        reach[i] += 1.0;
      }
    }
    auto expect = [&](auto&& self, int i) -> double {
      const auto& n = tree.nodes[i];
      if (n.leaf()) return n.value;
      if (known[n.feature]) {
        const double v = x[n.feature];
        return self(self, (missing(v) ? n.missing_goes_left : v <= n.threshold) ? n.left : n.right);
      }
      const double wl = reach[i] > 0 ? reach[n.left] / reach[i] : 0.5;
      return wl * self(self, n.left) + (1.0 - wl) * self(self, n.right);
    };
    total += e.learning_rate * expect(expect, 0);
  }
  return total;
}

/// Shapley values by the permutation-weighted subset formula.
inline std::vector<double> shapley(const stockhybrid::gbt::TreeEnsemble& e,
                                   const std::vector<double>& x,
                                   const std::vector<std::vector<double>>& background) {
  const std::size_t p = x.size();
  std::vector<double> factorial(p + 1, 1.0);
  for (std::size_t i = 1; i <= p; ++i) factorial[i] = factorial[i - 1] * static_cast<double>(i);
  std::vector<double> phi(p, 0.0);
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t mask = 0; mask < (std::size_t{1} << p); ++mask) {
      if (mask & (std::size_t{1} << j)) continue;
      std::vector<bool> known(p);
      std::size_t size = 0;
      for (std::size_t k = 0; k < p; ++k) {
        known[k] = (mask >> k) & 1;
        size += known[k];
      }
      const double without = coalition_value(e, x, known, background);
      known[j] = true;
      const double with = coalition_value(e, x, known, background);
      phi[j] += factorial[size] * factorial[p - size - 1] / factorial[p] * (with - without);
    }
  }
  return phi;
}

}  // namespace oracle
