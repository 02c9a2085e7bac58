#include <cmath>

#include "stockhybrid/hybrid.hpp"

namespace stockhybrid::hybrid {

double rmse(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size()) fail(ErrorCode::invalid_argument, "rmse: length mismatch");
  if (pred.empty()) fail(ErrorCode::invalid_argument, "rmse: no values");
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) sum += (pred[i] - truth[i]) * (pred[i] - truth[i]);
  return std::sqrt(sum / static_cast<double>(pred.size()));
}

double r_squared(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size()) {
    fail(ErrorCode::invalid_argument, "r_squared: length mismatch");
  }
  if (pred.size() < 2) fail(ErrorCode::invalid_argument, "r_squared needs at least two values");
  double mean = 0.0;
  for (double v : truth) mean += v;
  mean /= static_cast<double>(truth.size());
  double ss_res = 0.0;
  double ss_tot = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    ss_res += (truth[i] - pred[i]) * (truth[i] - pred[i]);
    ss_tot += (truth[i] - mean) * (truth[i] - mean);
  }
  if (!(ss_tot > 0.0)) fail(ErrorCode::domain, "r_squared: truth has zero variance");
  return 1.0 - ss_res / ss_tot;
}

void aggregate(BacktestReport& r) {
  r.ml_rmse = r.ml_r2 = r.baseline_rmse = r.baseline_r2 = kMissing;
  if (r.rows.empty()) return;
  std::vector<double> hybrid, baseline, label;
  for (const auto& row : r.rows) {
    hybrid.push_back(row.hybrid);
    baseline.push_back(row.baseline);
    label.push_back(row.label);
  }
  r.ml_rmse = rmse(hybrid, label);
  r.baseline_rmse = rmse(baseline, label);
  try {
    r.ml_r2 = r_squared(hybrid, label);
    r.baseline_r2 = r_squared(baseline, label);
  } catch (const Error&) {
    r.ml_r2 = r.baseline_r2 = kMissing;
  }
}

}  // namespace stockhybrid::hybrid
