#pragma once

// Synthetic age-structured stocks with known ground truth.

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "stockhybrid/core.hpp"

namespace stockhybrid::sim {

struct FleetSimConfig {
  std::string name;
  FleetKind kind = FleetKind::survey;
  double timing = 0.0;  // surveys only
  int min_age = 1;
  int max_age = 8;
  std::vector<double> catchability;  // one per covered age; ignored for catch
  double obs_sigma = 0.2;
  bool environment_linked = false;
};

struct EnvironmentConfig {
  bool enabled = false;
  double phi = 0.0;
  double sigma = 1.0;  // innovation standard deviation
  double recruitment_loading = 0.0;
  double survey_loading = 0.0;
};

struct SimConfig {
  AgeRange ages;
  int first_year = 1;
  int years = 40;
  double bh_alpha = 1.0;
  double bh_beta = 5e-6;
  double natural_mortality = 0.2;
  std::vector<double> weights;      // kg per age
  std::vector<double> maturity;     // per age
  std::vector<double> selectivity;  // per age, in [0, 1]
  double f_initial = 0.4;
  double f_sigma = 0.1;             // log random-walk step sd
  std::vector<double> fishing_path; // optional explicit f_t, overrides the walk
  double process_sigma = 0.05;      // survival noise
  double recruitment_sigma = 0.3;   // recruitment noise
  std::vector<FleetSimConfig> fleets;
  EnvironmentConfig environment;
  std::uint64_t seed = 1;

  void validate() const;
  /// A cod-like stock (ages 1-8+, one catch fleet and two surveys) with
  /// block-constant survey catchability and logistic selectivity.
  static SimConfig defaults();
};

/// Independent pseudo-random streams, one per stochastic component, so that
/// switching one noise source off leaves the others untouched.
struct SimStreams {
  std::mt19937_64 survival;
  std::mt19937_64 recruitment;
  std::mt19937_64 fishing;
  std::mt19937_64 environment;
  std::vector<std::mt19937_64> fleets;

  static SimStreams from_seed(std::uint64_t seed, std::size_t fleet_count);
};

struct TrueTrajectory {
  AbundanceMatrix abundance;
  std::vector<std::vector<double>> fishing_mortality;  // [year][age]
  std::vector<double> f;                               // fishing intensity per year
  std::vector<double> environment;                     // e_t (zeros when disabled)
  StockParameterSeries recruitment;
  StockParameterSeries ssb;
};

struct SimulationResult {
  TrueTrajectory truth;
  ObservationSeries observations;
  BiologySeries biology;
};

double beverton_holt(double ssb, double alpha, double beta);

/// Biology implied by the config (constant over years).
BiologySeries make_biology(const SimConfig& cfg);

/// Fixed point of the noise-free model at fishing intensity f. Throws a
/// config error when the warm-up does not settle within 10^4 years.
AbundanceVector equilibrium(const SimConfig& cfg, double f);

/// One year of the process model. `fishing` is F per age in year n.year and
/// `environment` is e for that year. Returns abundance in n.year + 1.
AbundanceVector step_population(const AbundanceVector& n, std::span<const double> fishing,
                                double environment, const SimConfig& cfg, SimStreams& rng);

ObservationSeries generate_observations(const TrueTrajectory& truth, const SimConfig& cfg,
                                        SimStreams& rng);

SimulationResult simulate(const SimConfig& cfg);

}  // namespace stockhybrid::sim
