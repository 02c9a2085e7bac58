#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <numeric>

#include "stockhybrid/simulator.hpp"
#include "support.hpp"

using namespace stockhybrid;
using namespace stockhybrid::sim;

namespace {

std::vector<double> fishing_vector(const SimConfig& c, double f) {
  std::vector<double> out;
  for (double s : c.selectivity) out.push_back(s * f);
  return out;
}

double correlation(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

TEST_CASE("beverton-holt examples") {
  CHECK(beverton_holt(0.0, 2.0, 1.0) == 0.0);
  CHECK(beverton_holt(1.0, 2.0, 1.0) == doctest::Approx(1.0));
  CHECK(beverton_holt(1e9, 10.0, 0.1) == doctest::Approx(100.0).epsilon(1e-6));
  CHECK_THROWS_AS(beverton_holt(-1.0, 2.0, 1.0), Error);
}

TEST_CASE("noise-free cohort decay") {
  auto c = SimConfig::defaults();
  c.process_sigma = 0.0;
  auto rng = SimStreams::from_seed(1, c.fleets.size());
  AbundanceVector n{5, c.ages, {1000, 800, 600, 400, 300, 200, 100, 50}};

  SUBCASE("without fishing") {
    const std::vector<double> zero(8, 0.0);
    const auto next = step_population(n, zero, 0.0, c, rng);
    CHECK(next.year == 6);
    for (int a = 0; a < 6; ++a) {
      CHECK(next.values[a + 1] == doctest::Approx(n.values[a] * std::exp(-0.2)).epsilon(1e-14));
    }
  }
  SUBCASE("with fishing") {
    const auto f = fishing_vector(c, 0.5);
    const auto next = step_population(n, f, 0.0, c, rng);
    for (int a = 0; a < 6; ++a) {
      CHECK(next.values[a + 1] ==
            doctest::Approx(n.values[a] * std::exp(-f[a] - 0.2)).epsilon(1e-14));
    }
    // Plus group gathers the survivors of the last two ages.
    CHECK(next.values[7] == doctest::Approx(n.values[6] * std::exp(-f[6] - 0.2) +
                                            n.values[7] * std::exp(-f[7] - 0.2))
                                .epsilon(1e-14));
  }
}

TEST_CASE("survival noise has zero-mean log residuals") {
  auto c = SimConfig::defaults();
  c.process_sigma = 0.2;
  auto rng = SimStreams::from_seed(99, c.fleets.size());
  const AbundanceVector n{1, c.ages, {1000, 800, 600, 400, 300, 200, 100, 50}};
  const auto f = fishing_vector(c, 0.3);
  const int reps = 100000;
  double sum = 0.0;
  for (int r = 0; r < reps; ++r) {
    const auto next = step_population(n, f, 0.0, c, rng);
    sum += std::log(next.values[3]) - (std::log(n.values[2]) - f[2] - 0.2);
  }
  CHECK(std::abs(sum / reps) < 3 * 0.2 / std::sqrt(double(reps)));
}

TEST_CASE("recruitment follows Beverton-Holt without noise") {
  auto c = SimConfig::defaults();
  c.process_sigma = 0.0;
  c.recruitment_sigma = 0.0;
  auto rng = SimStreams::from_seed(1, c.fleets.size());
  const AbundanceVector n{1, c.ages, {1000, 800, 600, 400, 300, 200, 100, 50}};
  const auto bio = make_biology(c);
  const auto next = step_population(n, fishing_vector(c, 0.3), 0.0, c, rng);
  CHECK(recruitment_of(next) == doctest::Approx(beverton_holt(ssb(n, bio), c.bh_alpha, c.bh_beta)));
}

TEST_CASE("survey observations without noise") {
  auto c = SimConfig::defaults();
  c.years = 12;
  for (auto& f : c.fleets) f.obs_sigma = 0.0;
  auto& survey = c.fleets[1];
  std::fill(survey.catchability.begin(), survey.catchability.end(), 1.0);

  SUBCASE("identity at the start of the year") {
    survey.timing = 0.0;
    const auto r = simulate(c);
    const auto& s = *r.observations.find("survey_q1");
    for (int y = 1; y <= 12; ++y) {
      for (int age = 1; age <= 6; ++age) {
        CHECK(s.value(y, age) == doctest::Approx(r.truth.abundance.row(y).at_age(age)));
      }
    }
  }
  SUBCASE("end-of-year survivors") {
    survey.timing = 1.0;
    const auto r = simulate(c);
    const auto& s = *r.observations.find("survey_q1");
    for (int y = 1; y <= 12; ++y) {
      const auto& f = r.truth.fishing_mortality[y - 1];
      for (int age = 1; age <= 6; ++age) {
        const double survivors =
            r.truth.abundance.row(y).at_age(age) * std::exp(-f[age - 1] - c.natural_mortality);
        CHECK(s.value(y, age) == doctest::Approx(survivors));
      }
    }
  }
}

TEST_CASE("median survey index ratio matches catchability and timing") {
  auto c = SimConfig::defaults();
  c.years = 10;
  const auto r = simulate(c);
  const auto& fc = c.fleets[2];
  const int age = 3;
  std::vector<double> ratios;
  auto rng = SimStreams::from_seed(5, c.fleets.size());
  while (ratios.size() < 100000) {
    const auto obs = generate_observations(r.truth, c, rng);
    const auto& s = *obs.find(fc.name);
    for (int y = 1; y <= 10; ++y) {
      const double z = r.truth.fishing_mortality[y - 1][age - 1] + c.natural_mortality;
      const double q = fc.catchability[age - fc.min_age];
      ratios.push_back(s.value(y, age) / r.truth.abundance.row(y).at_age(age) /
                       (q * std::exp(-fc.timing * z)));
    }
  }
  std::nth_element(ratios.begin(), ratios.begin() + ratios.size() / 2, ratios.end());
  CHECK(ratios[ratios.size() / 2] == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("simulate is deterministic in its seed") {
  const auto a = simulate(testing::environment_stock(17));
  const auto b = simulate(testing::environment_stock(17));
  const auto c = simulate(testing::environment_stock(18));
  for (std::size_t i = 0; i < a.observations.fleets.size(); ++i) {
    CHECK(a.observations.fleets[i].values == b.observations.fleets[i].values);
  }
  CHECK(a.truth.environment == b.truth.environment);
  CHECK(a.observations.fleets[0].values != c.observations.fleets[0].values);
}

TEST_CASE("noise-free simulation stays at equilibrium") {
  const auto c = testing::noise_free_stock();
  const auto r = simulate(c);
  const auto eq = equilibrium(c, c.f_initial);
  for (const auto& row : r.truth.abundance.rows()) {
    for (std::size_t a = 0; a < row.values.size(); ++a) {
      CHECK(row.values[a] == doctest::Approx(eq.values[a]).epsilon(1e-10));
    }
  }
}

TEST_CASE("environment drives recruitment deviations") {
  auto c = testing::environment_stock(3);
  c.years = 200;
  const auto r = simulate(c);
  const auto bio = make_biology(c);
  std::vector<double> e, dev;
  for (int t = 1; t < 200; ++t) {
    const auto& n = r.truth.abundance.row(t);
    e.push_back(r.truth.environment[t - 1]);
    dev.push_back(std::log(r.truth.recruitment.at(t + 1)) -
                  std::log(beverton_holt(ssb(n, bio), c.bh_alpha, c.bh_beta)));
  }
  CHECK(correlation(e, dev) > 0.5);
}

TEST_CASE("white-noise environment has no lag-1 autocorrelation") {
  auto c = testing::environment_stock(4);
  c.environment.phi = 0.0;
  c.years = 2000;
  const auto r = simulate(c);
  const auto& e = r.truth.environment;
  const std::vector<double> a(e.begin(), e.end() - 1), b(e.begin() + 1, e.end());
  CHECK(std::abs(correlation(a, b)) < 3.0 / std::sqrt(2000.0));
}

TEST_CASE("abundance is strictly positive and conserved without noise") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto r = simulate(testing::environment_stock(seed));
    for (const auto& row : r.truth.abundance.rows()) {
      for (double v : row.values) CHECK(v > 0.0);
    }
  }
  auto c = testing::noise_free_stock();
  c.fishing_path.assign(40, 0.0);
  for (int t = 0; t < 40; ++t) c.fishing_path[t] = 0.2 + 0.01 * t;
  const auto r = simulate(c);
  for (int y = 1; y < 40; ++y) {
    const auto& n = r.truth.abundance.row(y);
    const auto& next = r.truth.abundance.row(y + 1);
    const auto& f = r.truth.fishing_mortality[y - 1];
    double deaths = 0.0, now = 0.0, later = 0.0;
    for (std::size_t a = 0; a < n.values.size(); ++a) {
      deaths += n.values[a] * (1.0 - std::exp(-f[a] - c.natural_mortality));
      now += n.values[a];
      later += next.values[a];
    }
    CHECK(deaths == doctest::Approx(now - later + next.values[0]).epsilon(1e-12));
  }
}

TEST_CASE("catch observations centre on the Baranov prediction") {
  auto c = testing::plain_stock(8);
  for (auto& f : c.fleets) f.obs_sigma = 1e-4;
  const auto r = simulate(c);
  const auto& fleet = *r.observations.find("catch");
  double sum = 0.0;
  int count = 0;
  for (int y = 1; y <= 40; ++y) {
    const auto& n = r.truth.abundance.row(y);
    const auto pred =
        baranov_catch(n.values, r.truth.fishing_mortality[y - 1], c.natural_mortality);
    for (int age = 1; age <= 8; ++age) {
      sum += std::log(fleet.value(y, age) / pred[age - 1]);
      ++count;
    }
  }
  CHECK(std::exp(sum / count) == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("config validation") {
  auto c = SimConfig::defaults();
  c.years = 5;
  CHECK_THROWS_AS(c.validate(), Error);
  c = SimConfig::defaults();
  c.environment.enabled = true;
  c.environment.phi = 1.0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = SimConfig::defaults();
  c.bh_beta = 0.0;
  CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("switching off one noise source leaves the others untouched") {
  auto a = testing::plain_stock(21);
  auto b = a;
  b.fleets[1].obs_sigma = 0.0;
  const auto ra = simulate(a), rb = simulate(b);
  CHECK(ra.truth.recruitment.values == rb.truth.recruitment.values);
  CHECK(ra.observations.fleets[2].values == rb.observations.fleets[2].values);
}
