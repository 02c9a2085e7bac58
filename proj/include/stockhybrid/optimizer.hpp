#pragma once

#include <functional>
#include <span>
#include <vector>

namespace stockhybrid::opt {

struct NelderMeadOptions {
  int max_evaluations = 20000;
  double f_tolerance = 1e-6;  // stop when max - min over the simplex falls below
};

struct NelderMeadResult {
  std::vector<double> x;
  double value = 0.0;
  int evaluations = 0;
  bool converged = false;
};

using Objective = std::function<double(std::span<const double>)>;

/// Downhill simplex with dimension-adaptive coefficients (Gao and Han, 2012).
/// Points are projected onto [lower, upper] before evaluation. Non-finite
/// objective values are treated as +inf.
NelderMeadResult nelder_mead(const Objective& f, std::vector<double> start,
                             std::span<const double> steps, std::span<const double> lower,
                             std::span<const double> upper, const NelderMeadOptions& options);

}  // namespace stockhybrid::opt
