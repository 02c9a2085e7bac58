#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "stockhybrid/core.hpp"
#include "support.hpp"

using namespace stockhybrid;
using testing::flat_biology;

namespace {

AbundanceVector vec(int year, AgeRange ages, std::vector<double> v) {
  return AbundanceVector{year, ages, std::move(v)};
}

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::ok;
}

}  // namespace

TEST_CASE("ssb examples") {
  const AgeRange ages{1, 3, true};
  auto bio = flat_biology(ages, 2000, 2001, 1.0, 0.0, 0.2);
  CHECK(ssb(vec(2000, ages, {10, 20, 30}), bio) == 0.0);

  bio.weight(2000)[2] = 2.0;
  bio.maturity(2000)[2] = 1.0;
  CHECK(ssb(vec(2000, ages, {7, 9, 100}), bio) == doctest::Approx(200.0));

  auto ones = flat_biology(ages, 2000, 2000, 1.0, 1.0, 0.2);
  CHECK(ssb(vec(2000, ages, {1.5, 2.5, 3.0}), ones) == doctest::Approx(7.0));
}

TEST_CASE("ssb without biology for the year is a missing-data error") {
  const AgeRange ages{1, 3, true};
  const auto bio = flat_biology(ages, 2000, 2001, 1.0, 1.0, 0.2);
  CHECK(code_of([&] { ssb(vec(2005, ages, {1, 2, 3}), bio); }) == ErrorCode::missing_data);
}

TEST_CASE("ssb is linear in abundance") {
  const AgeRange ages{1, 5, true};
  auto bio = flat_biology(ages, 1, 1, 1.0, 0.5, 0.2);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1000.0);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<double> n(5);
    for (auto& v : n) v = u(rng);
    for (int a = 0; a < 5; ++a) bio.weight(1)[a] = 0.1 + u(rng) / 100.0;
    const double alpha = u(rng) / 100.0;
    std::vector<double> scaled = n;
    for (auto& v : scaled) v *= alpha;
    CHECK(ssb(vec(1, ages, scaled), bio) ==
          doctest::Approx(alpha * ssb(vec(1, ages, n), bio)).epsilon(1e-12));
  }
}

TEST_CASE("recruitment_of takes the youngest age") {
  const AgeRange ages{1, 3, true};
  CHECK(recruitment_of(vec(1, ages, {5, 10, 20})) == 5.0);
  CHECK(recruitment_of(vec(1, ages, {0, 0, 0})) == 0.0);
  const AgeRange from_zero{0, 2, true};
  CHECK(recruitment_of(vec(1, from_zero, {3, 10, 20})) == 3.0);
}

TEST_CASE("baranov catch examples") {
  CHECK(baranov_catch(1000.0, 0.0, 0.2) == 0.0);
  CHECK(baranov_catch(1000.0, 0.2, 0.2) == doctest::Approx(0.5 * (1 - std::exp(-0.4)) * 1000));
  CHECK(baranov_catch(1000.0, 0.2, 0.2) == doctest::Approx(164.84).epsilon(1e-4));
  CHECK(baranov_catch(1000.0, 50.0, 0.0) == doctest::Approx(1000.0));
  CHECK(baranov_catch(1000.0, 0.0, 0.0) == 0.0);
  const std::vector<double> n = {100, 200}, f = {0, 0};
  for (double c : baranov_catch(n, f, 0.3)) CHECK(c == 0.0);
}

TEST_CASE("baranov catch rejects negative inputs") {
  CHECK(code_of([] { baranov_catch(-1.0, 0.1, 0.2); }) == ErrorCode::domain);
  CHECK(code_of([] { baranov_catch(1.0, -0.1, 0.2); }) == ErrorCode::domain);
  CHECK(code_of([] { baranov_catch(1.0, 0.1, -0.2); }) == ErrorCode::domain);
}

TEST_CASE("baranov catch is bounded by total deaths and monotone in F") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 1000; ++rep) {
    const double n = 1000 * u(rng), m = u(rng), f1 = 3 * u(rng), f2 = f1 + u(rng);
    const double c1 = baranov_catch(n, f1, m), c2 = baranov_catch(n, f2, m);
    CHECK(c1 <= n * (1 - std::exp(-(f1 + m))) + 1e-9);
    CHECK(c2 >= c1 - 1e-12);
  }
}

TEST_CASE("flatten_features naming and order") {
  CHECK(flatten_features({}).empty());

  FeatureParts parts;
  parts.abundance = vec(2000, AgeRange{1, 3, true}, {1, 2, 3});
  parts.observations.push_back({"S1", {1, 2}, {4, kMissing}});
  const auto fv = flatten_features(parts);
  REQUIRE(fv.size() == 5);
  CHECK(fv.names == std::vector<std::string>{"N_a1", "N_a2", "N_a3", "S1_a1", "S1_a2"});
  CHECK(is_missing(fv.values[4]));
  CHECK(fv.schema_id == schema_id_for(fv.names));

  const auto again = flatten_features(parts);
  CHECK(again.names == fv.names);
  CHECK(again.schema_id == fv.schema_id);
  CHECK(again.values[3] == fv.values[3]);

  FeatureParts mixed;
  mixed.parameters.emplace_back("SSB_hat", 10.0);
  mixed.observations.push_back({"biomass", {}, {3.0}});
  CHECK(flatten_features(mixed).names == std::vector<std::string>{"SSB_hat", "biomass"});
}

TEST_CASE("flatten_features rejects duplicate names") {
  FeatureParts parts;
  parts.parameters = {{"REC_hat", 1.0}, {"REC_hat", 2.0}};
  CHECK(code_of([&] { flatten_features(parts); }) == ErrorCode::schema);
}

TEST_CASE("flatten_features is injective on a schema") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int rep = 0; rep < 200; ++rep) {
    FeatureParts a;
    a.abundance = vec(1, AgeRange{1, 2, true}, {u(rng), u(rng)});
    a.observations.push_back({"S", {1}, {u(rng)}});
    FeatureParts b = a;
    b.observations[0].values[0] += 0.5;
    CHECK(flatten_features(a).values != flatten_features(b).values);
  }
}

TEST_CASE("age range validation") {
  CHECK(code_of([] { AgeRange{-1, 3, true}.validate(); }) != ErrorCode::ok);
  CHECK(code_of([] { AgeRange{3, 3, true}.validate(); }) != ErrorCode::ok);
  CHECK(code_of([] { AgeRange{0, 3, true}.validate(); }) == ErrorCode::ok);
}

TEST_CASE("observation series needs a catch fleet and a survey") {
  ObservationSeries obs;
  obs.first_year = 1;
  obs.last_year = 2;
  FleetObservation s;
  s.name = "S";
  s.kind = FleetKind::survey;
  s.timing = 0.5;
  s.first_year = 1;
  s.ages = {1};
  s.values = {{1.0}, {2.0}};
  obs.fleets.push_back(s);
  CHECK(code_of([&] { obs.validate(); }) != ErrorCode::ok);
  FleetObservation c = s;
  c.name = "C";
  c.kind = FleetKind::commercial_catch;
  c.timing = kMissing;
  obs.fleets.push_back(c);
  CHECK(code_of([&] { obs.validate(); }) == ErrorCode::ok);
  obs.fleets[0].values[1][0] = -2.0;
  CHECK(code_of([&] { obs.validate(); }) != ErrorCode::ok);
}

TEST_CASE("truncated drops later years") {
  ObservationSeries obs;
  obs.first_year = 1;
  obs.last_year = 3;
  FleetObservation s;
  s.name = "S";
  s.timing = 0.5;
  s.first_year = 1;
  s.ages = {1};
  s.values = {{1.0}, {2.0}, {3.0}};
  obs.fleets.push_back(s);
  const auto t = obs.truncated(2);
  CHECK(t.last_year == 2);
  CHECK(t.fleets[0].last_year() == 2);
  CHECK(is_missing(t.fleets[0].value(3, 1)));
}
