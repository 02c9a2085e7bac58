#include "stockhybrid/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "stockhybrid/error.hpp"

namespace stockhybrid::opt {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

NelderMeadResult nelder_mead(const Objective& f, std::vector<double> start,
                             std::span<const double> steps, std::span<const double> lower,
                             std::span<const double> upper, const NelderMeadOptions& options) {
  const std::size_t n = start.size();
  if (n == 0 || steps.size() != n || lower.size() != n || upper.size() != n) {
    fail(ErrorCode::invalid_argument, "nelder_mead: dimension mismatch");
  }
  const double dim = static_cast<double>(n);
  const double reflect = 1.0;
  const double expand = 1.0 + 2.0 / dim;
  const double contract = 0.75 - 1.0 / (2.0 * dim);
  const double shrink = 1.0 - 1.0 / dim;

  int evaluations = 0;
  auto project = [&](std::vector<double>& x) {
    for (std::size_t i = 0; i < n; ++i) x[i] = std::clamp(x[i], lower[i], upper[i]);
  };
  auto eval = [&](std::vector<double>& x) {
    project(x);
    ++evaluations;
    const double v = f(x);
    return std::isfinite(v) ? v : kInf;
  };

  std::vector<std::vector<double>> simplex(n + 1, start);
  std::vector<double> values(n + 1);
  values[0] = eval(simplex[0]);
  for (std::size_t i = 0; i < n; ++i) {
    auto& v = simplex[i + 1];
    v[i] += steps[i];
    // Step away from a bound instead of collapsing onto it.
    if (v[i] > upper[i]) v[i] = start[i] - steps[i];
    values[i + 1] = eval(v);
  }

  std::vector<std::size_t> order(n + 1);
  std::vector<double> centroid(n), trial(n), trial2(n);
  bool converged = false;
  while (true) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    {
      std::vector<std::vector<double>> s2;
      std::vector<double> v2;
      for (auto i : order) {
        s2.push_back(simplex[i]);
        v2.push_back(values[i]);
      }
      simplex.swap(s2);
      values.swap(v2);
    }
    const double best = values.front();
    const double worst = values.back();
    if (std::isfinite(worst) && worst - best <= options.f_tolerance) {
      converged = true;
      break;
    }
    if (evaluations >= options.max_evaluations) break;

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) centroid[j] += simplex[i][j];
    }
    for (auto& c : centroid) c /= dim;

    const auto& worst_pt = simplex[n];
    for (std::size_t j = 0; j < n; ++j) {
      trial[j] = centroid[j] + reflect * (centroid[j] - worst_pt[j]);
    }
    const double fr = eval(trial);
    if (fr < values[0]) {
      for (std::size_t j = 0; j < n; ++j) {
        trial2[j] = centroid[j] + expand * (trial[j] - centroid[j]);
      }
      const double fe = eval(trial2);
      if (fe < fr) {
        simplex[n] = trial2;
        values[n] = fe;
      } else {
        simplex[n] = trial;
        values[n] = fr;
      }
      continue;
    }
    if (fr < values[n - 1]) {
      simplex[n] = trial;
      values[n] = fr;
      continue;
    }
    bool accepted = false;
    if (fr < values[n]) {
      for (std::size_t j = 0; j < n; ++j) {
        trial2[j] = centroid[j] + contract * (trial[j] - centroid[j]);
      }
      const double fc = eval(trial2);
      if (fc <= fr) {
        simplex[n] = trial2;
        values[n] = fc;
        accepted = true;
      }
    } else {
      for (std::size_t j = 0; j < n; ++j) {
        trial2[j] = centroid[j] - contract * (centroid[j] - worst_pt[j]);
      }
      const double fc = eval(trial2);
      if (fc < values[n]) {
        simplex[n] = trial2;
        values[n] = fc;
        accepted = true;
      }
    }
    if (accepted) continue;
    for (std::size_t i = 1; i <= n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        simplex[i][j] = simplex[0][j] + shrink * (simplex[i][j] - simplex[0][j]);
      }
      values[i] = eval(simplex[i]);
    }
  }
  return NelderMeadResult{simplex[0], values[0], evaluations, converged};
}

}  // namespace stockhybrid::opt
