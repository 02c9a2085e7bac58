#pragma once

// Internal: the prepared extended-Kalman-filter model behind assess::fit.

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "stockhybrid/assessor.hpp"

namespace stockhybrid::assess::detail {

struct FleetInfo {
  std::string name;
  FleetKind kind = FleetKind::survey;
  double timing = 0.0;
  int sigma_index = -1;
  std::vector<int> q_index;  // per model age index, -1 where not applicable
};

struct ObsCell {
  int fleet = 0;
  int age = 0;  // model age index
  double log_value = 0.0;
};

struct Decoded {
  double var_rec = 0.0;
  double var_proc = 0.0;
  double var_f = 0.0;
  std::vector<double> var_obs;  // per fleet
  std::vector<double> log_q;    // indexed like the parameter vector
  std::vector<double> selectivity;
  double bh_alpha = 0.0;
  double bh_beta = 0.0;
};

class StateSpaceModel {
 public:
  StateSpaceModel(const ObservationSeries& obs, const BiologySeries& bio,
                  const AssessorConfig& cfg);

  const std::vector<Parameter>& layout() const { return layout_; }
  int state_dim() const { return ages_ + 1; }
  int first_year() const { return first_year_; }
  int last_year() const { return last_year_; }
  const AssessorConfig& config() const { return cfg_; }

  Decoded decode(std::span<const double> theta) const;
  double nll(std::span<const double> theta) const;
  FilterOutput run(std::span<const double> theta, bool keep_states, bool smooth) const;

  std::vector<double> selectivity(double a50, double log_slope) const;
  std::span<const double> mortality(int year) const;
  std::span<const double> weight(int year) const;
  std::span<const double> maturity(int year) const;

  /// Prior mean for the first year: equilibrium age structure at the
  /// fishing intensity and recruitment level that best match the first
  /// year of catch-at-age.
  Eigen::VectorXd initial_mean(std::span<const double> selectivity) const;

 private:
  void build_layout();

  AssessorConfig cfg_;
  int ages_ = 0;
  int first_year_ = 0;
  int last_year_ = 0;
  std::vector<FleetInfo> fleets_;
  std::vector<std::vector<ObsCell>> cells_;  // per year
  std::vector<double> mortality_, weight_, maturity_;  // [year][age] flattened
  std::vector<Parameter> layout_;
  int sigma_obs_begin_ = 0;
  int q_begin_ = 0;
  int sel_begin_ = 0;
  int bh_begin_ = -1;
};

}  // namespace stockhybrid::assess::detail
