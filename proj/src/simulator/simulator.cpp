#include "stockhybrid/simulator.hpp"

#include <algorithm>
#include <cmath>

namespace stockhybrid::sim {
namespace {

constexpr int kMaxWarmupYears = 10000;

std::vector<double> fishing_at_age(const SimConfig& cfg, double f) {
  std::vector<double> out(cfg.selectivity.size());
  for (std::size_t a = 0; a < out.size(); ++a) out[a] = cfg.selectivity[a] * f;
  return out;
}

double standard_normal(std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  return dist(rng);
}

// Noise-free survival of every age class into the next year, before
// recruitment is placed at the youngest age.
std::vector<double> survivors(const std::vector<double>& n, std::span<const double> fishing,
                              const SimConfig& cfg) {
  const int width = cfg.ages.size();
  std::vector<double> next(static_cast<std::size_t>(width), 0.0);
  for (int a = 0; a + 1 < width; ++a) {
    next[a + 1] = n[a] * std::exp(-fishing[a] - cfg.natural_mortality);
  }
  if (cfg.ages.plus_group) {
    next[width - 1] += n[width - 1] * std::exp(-fishing[width - 1] - cfg.natural_mortality);
  }
  return next;
}

}  // namespace

void SimConfig::validate() const {
  ages.validate();
  const auto width = static_cast<std::size_t>(ages.size());
  if (years < 10) fail(ErrorCode::config, "simulation needs at least 10 years");
  if (!(bh_alpha > 0.0) || !(bh_beta > 0.0)) {
    fail(ErrorCode::config, "Beverton-Holt alpha and beta must be positive");
  }
  if (!(natural_mortality >= 0.0)) fail(ErrorCode::config, "natural mortality must be >= 0");
  if (weights.size() != width || maturity.size() != width || selectivity.size() != width) {
    fail(ErrorCode::config, "weights, maturity and selectivity need one value per age");
  }
  for (std::size_t a = 0; a < width; ++a) {
    if (!(weights[a] > 0.0)) fail(ErrorCode::config, "weights must be positive");
    if (!(maturity[a] >= 0.0 && maturity[a] <= 1.0)) fail(ErrorCode::config, "maturity in [0,1]");
    if (!(selectivity[a] >= 0.0 && selectivity[a] <= 1.0)) {
      fail(ErrorCode::config, "selectivity must lie in [0, 1]");
    }
  }
  if (!(f_initial > 0.0)) fail(ErrorCode::config, "initial fishing intensity must be positive");
  if (!fishing_path.empty() && static_cast<int>(fishing_path.size()) != years) {
    fail(ErrorCode::config, "explicit fishing path must have one value per year");
  }
  for (double f : fishing_path) {
    if (!(f >= 0.0)) fail(ErrorCode::config, "fishing path values must be non-negative");
  }
  if (!(f_sigma >= 0.0) || !(process_sigma >= 0.0) || !(recruitment_sigma >= 0.0)) {
    fail(ErrorCode::config, "noise standard deviations must be non-negative");
  }
  bool has_catch = false;
  bool has_survey = false;
  for (const auto& fl : fleets) {
    if (fl.name.empty()) fail(ErrorCode::config, "fleet name is empty");
    if (!(fl.obs_sigma >= 0.0)) fail(ErrorCode::config, "observation sigma must be >= 0");
    if (fl.min_age < ages.min_age || fl.max_age > ages.max_age || fl.max_age < fl.min_age) {
      fail(ErrorCode::config, "fleet '" + fl.name + "' age coverage outside the stock");
    }
    if (fl.kind == FleetKind::survey) {
      has_survey = true;
      if (!(fl.timing >= 0.0 && fl.timing <= 1.0)) {
        fail(ErrorCode::config, "survey timing must lie in [0, 1]");
      }
      if (static_cast<int>(fl.catchability.size()) != fl.max_age - fl.min_age + 1) {
        fail(ErrorCode::config, "survey '" + fl.name + "' needs one catchability per age");
      }
      for (double q : fl.catchability) {
        if (!(q > 0.0)) fail(ErrorCode::config, "catchability must be positive");
      }
    } else {
      has_catch = true;
    }
  }
  if (!has_catch || !has_survey) {
    fail(ErrorCode::config, "simulation needs one catch fleet and at least one survey");
  }
  if (environment.enabled) {
    if (!(environment.phi > -1.0 && environment.phi < 1.0)) {
      fail(ErrorCode::config, "environment phi must lie in (-1, 1)");
    }
    if (!(environment.sigma >= 0.0)) fail(ErrorCode::config, "environment sigma must be >= 0");
  }
}

SimConfig SimConfig::defaults() {
  SimConfig cfg;
  cfg.ages = AgeRange{1, 8, true};
  cfg.weights = {0.15, 0.45, 0.9, 1.4, 1.9, 2.4, 2.8, 3.2};
  cfg.maturity = {0.0, 0.2, 0.6, 0.9, 1.0, 1.0, 1.0, 1.0};
  cfg.selectivity.resize(8);
  for (int a = 0; a < 8; ++a) {
    cfg.selectivity[a] = 1.0 / (1.0 + std::exp(-1.8 * ((a + 1) - 2.5)));
  }
  FleetSimConfig catch_fleet;
  catch_fleet.name = "catch";
  catch_fleet.kind = FleetKind::commercial_catch;
  catch_fleet.min_age = 1;
  catch_fleet.max_age = 8;
  catch_fleet.obs_sigma = 0.15;

  FleetSimConfig q1;
  q1.name = "survey_q1";
  q1.timing = 0.1;
  q1.min_age = 1;
  q1.max_age = 6;
  q1.catchability = {0.5, 0.8, 1.0, 1.0, 1.0, 1.0};
  q1.obs_sigma = 0.25;
  q1.environment_linked = true;

  FleetSimConfig q4;
  q4.name = "survey_q4";
  q4.timing = 0.85;
  q4.min_age = 1;
  q4.max_age = 5;
  q4.catchability = {0.2, 0.4, 0.6, 0.6, 0.6};
  q4.obs_sigma = 0.3;

  cfg.fleets = {catch_fleet, q1, q4};
  return cfg;
}

SimStreams SimStreams::from_seed(std::uint64_t seed, std::size_t fleet_count) {
  auto derive = [seed](std::uint32_t component) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      component};
    return std::mt19937_64(seq);
  };
  SimStreams s{derive(1), derive(2), derive(3), derive(4), {}};
  for (std::size_t i = 0; i < fleet_count; ++i) {
    s.fleets.push_back(derive(100 + static_cast<std::uint32_t>(i)));
  }
  return s;
}

double beverton_holt(double ssb, double alpha, double beta) {
  if (!(ssb >= 0.0)) fail(ErrorCode::domain, "Beverton-Holt needs non-negative SSB");
  return alpha * ssb / (1.0 + beta * ssb);
}

BiologySeries make_biology(const SimConfig& cfg) {
  const int last = cfg.first_year + cfg.years - 1;
  BiologySeries bio(cfg.ages, cfg.first_year, last);
  for (int y = cfg.first_year; y <= last; ++y) {
    std::copy(cfg.weights.begin(), cfg.weights.end(), bio.weight(y).begin());
    std::copy(cfg.maturity.begin(), cfg.maturity.end(), bio.maturity(y).begin());
    std::fill(bio.natural_mortality(y).begin(), bio.natural_mortality(y).end(),
              cfg.natural_mortality);
  }
  return bio;
}

AbundanceVector equilibrium(const SimConfig& cfg, double f) {
  const auto fishing = fishing_at_age(cfg, f);
  const auto width = static_cast<std::size_t>(cfg.ages.size());
  std::vector<double> n(width);
  n[0] = 0.5 * cfg.bh_alpha / cfg.bh_beta;
  for (std::size_t a = 1; a < width; ++a) {
    n[a] = n[a - 1] * std::exp(-fishing[a - 1] - cfg.natural_mortality);
  }
  for (int year = 0; year < kMaxWarmupYears; ++year) {
    double spawners = 0.0;
    for (std::size_t a = 0; a < width; ++a) spawners += cfg.weights[a] * cfg.maturity[a] * n[a];
    auto next = survivors(n, fishing, cfg);
    next[0] = beverton_holt(spawners, cfg.bh_alpha, cfg.bh_beta);
    double change = 0.0;
    for (std::size_t a = 0; a < width; ++a) {
      change = std::max(change, std::abs(next[a] - n[a]) / std::max(n[a], 1e-300));
    }
    n = std::move(next);
    if (change < 1e-13) {
      if (!(n[0] > 0.0)) break;
      return AbundanceVector{cfg.first_year, cfg.ages, n};
    }
  }
  fail(ErrorCode::config, "equilibrium warm-up did not converge within 10^4 years");
}

AbundanceVector step_population(const AbundanceVector& n, std::span<const double> fishing,
                                double environment, const SimConfig& cfg, SimStreams& rng) {
  const int width = cfg.ages.size();
  if (static_cast<int>(n.values.size()) != width || static_cast<int>(fishing.size()) != width) {
    fail(ErrorCode::invalid_argument, "step_population: age dimension mismatch");
  }
  for (double v : n.values) {
    if (!(v >= 0.0)) fail(ErrorCode::domain, "step_population needs non-negative abundance");
  }
  auto next = survivors(n.values, fishing, cfg);
  for (int a = 1; a < width; ++a) {
    next[a] *= std::exp(cfg.process_sigma * standard_normal(rng.survival));
  }
  double spawners = 0.0;
  for (int a = 0; a < width; ++a) spawners += cfg.weights[a] * cfg.maturity[a] * n.values[a];
  const double env_effect =
      cfg.environment.enabled ? cfg.environment.recruitment_loading * environment : 0.0;
  next[0] = beverton_holt(spawners, cfg.bh_alpha, cfg.bh_beta) *
            std::exp(env_effect + cfg.recruitment_sigma * standard_normal(rng.recruitment));
  return AbundanceVector{n.year + 1, n.ages, std::move(next)};
}

ObservationSeries generate_observations(const TrueTrajectory& truth, const SimConfig& cfg,
                                        SimStreams& rng) {
  ObservationSeries obs;
  obs.first_year = truth.abundance.first_year();
  obs.last_year = truth.abundance.last_year();
  const double env_loading = cfg.environment.enabled ? cfg.environment.survey_loading : 0.0;
  for (std::size_t i = 0; i < cfg.fleets.size(); ++i) {
    const auto& fc = cfg.fleets[i];
    auto& stream = rng.fleets.at(i);
    FleetObservation fleet;
    fleet.name = fc.name;
    fleet.kind = fc.kind;
    fleet.timing = fc.kind == FleetKind::survey ? fc.timing : kMissing;
    fleet.first_year = obs.first_year;
    for (int age = fc.min_age; age <= fc.max_age; ++age) fleet.ages.push_back(age);
    for (int year = obs.first_year; year <= obs.last_year; ++year) {
      const auto& n = truth.abundance.row(year);
      const auto& fishing = truth.fishing_mortality[static_cast<std::size_t>(year - obs.first_year)];
      const double e = truth.environment[static_cast<std::size_t>(year - obs.first_year)];
      std::vector<double> row;
      for (int age = fc.min_age; age <= fc.max_age; ++age) {
        const int a = cfg.ages.index(age);
        const double noise = std::exp(fc.obs_sigma * standard_normal(stream));
        double expected;
        if (fc.kind == FleetKind::commercial_catch) {
          expected = baranov_catch(n.values[a], fishing[a], cfg.natural_mortality);
        } else {
          const double q = fc.catchability[static_cast<std::size_t>(age - fc.min_age)];
          const double z = fishing[a] + cfg.natural_mortality;
          expected = q * n.values[a] * std::exp(-fc.timing * z +
                                                (fc.environment_linked ? env_loading * e : 0.0));
        }
        row.push_back(expected * noise);
      }
      fleet.values.push_back(std::move(row));
    }
    obs.fleets.push_back(std::move(fleet));
  }
  return obs;
}

SimulationResult simulate(const SimConfig& cfg) {
  cfg.validate();
  auto rng = SimStreams::from_seed(cfg.seed, cfg.fleets.size());
  SimulationResult out;
  out.biology = make_biology(cfg);
  auto& truth = out.truth;
  const auto years = static_cast<std::size_t>(cfg.years);

  truth.f.resize(years);
  if (!cfg.fishing_path.empty()) {
    truth.f = cfg.fishing_path;
  } else {
    truth.f[0] = cfg.f_initial;
    for (std::size_t t = 1; t < years; ++t) {
      truth.f[t] = truth.f[t - 1] * std::exp(cfg.f_sigma * standard_normal(rng.fishing));
    }
  }

  truth.environment.assign(years, 0.0);
  if (cfg.environment.enabled) {
    const auto& env = cfg.environment;
    truth.environment[0] =
        env.sigma / std::sqrt(1.0 - env.phi * env.phi) * standard_normal(rng.environment);
    for (std::size_t t = 1; t < years; ++t) {
      truth.environment[t] =
          env.phi * truth.environment[t - 1] + env.sigma * standard_normal(rng.environment);
    }
  }

  truth.abundance = AbundanceMatrix(cfg.ages, cfg.first_year);
  AbundanceVector n = equilibrium(cfg, cfg.fishing_path.empty() ? cfg.f_initial : truth.f[0]);
  n.year = cfg.first_year;
  truth.recruitment = {ParameterKind::recruitment, cfg.first_year, {}};
  truth.ssb = {ParameterKind::ssb, cfg.first_year, {}};
  for (std::size_t t = 0; t < years; ++t) {
    truth.fishing_mortality.push_back(fishing_at_age(cfg, truth.f[t]));
    truth.recruitment.values.push_back(recruitment_of(n));
    truth.ssb.values.push_back(ssb(n, out.biology));
    truth.abundance.append(n);
    if (t + 1 < years) {
      n = step_population(n, truth.fishing_mortality.back(), truth.environment[t], cfg, rng);
    }
  }
  out.observations = generate_observations(truth, cfg, rng);
  return out;
}

}  // namespace stockhybrid::sim
