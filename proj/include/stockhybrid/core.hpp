#pragma once

// Shared domain types and closed-form fisheries arithmetic.
//
// Units are fixed throughout the library: abundance in thousands of fish,
// weight-at-age in kg, and biomass in tonnes (kg x thousands = tonnes).

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "stockhybrid/error.hpp"

namespace stockhybrid {

/// Marker for an unobserved cell. Trees route it via a learned direction.
inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();
inline bool is_missing(double v) { return std::isnan(v); }

struct AgeRange {
  int min_age = 1;
  int max_age = 8;
  bool plus_group = true;

  int size() const { return max_age - min_age + 1; }
  bool contains(int age) const { return age >= min_age && age <= max_age; }
  int index(int age) const { return age - min_age; }
  void validate() const;

  friend bool operator==(const AgeRange&, const AgeRange&) = default;
};

struct AbundanceVector {
  int year = 0;
  AgeRange ages;
  std::vector<double> values;

  double at_age(int age) const;
  void validate() const;
};

/// Numbers-at-age over a contiguous run of years.
class AbundanceMatrix {
 public:
  AbundanceMatrix() = default;
  AbundanceMatrix(AgeRange ages, int first_year) : ages_(ages), first_year_(first_year) {}

  void append(AbundanceVector row);

  const AgeRange& ages() const { return ages_; }
  int first_year() const { return first_year_; }
  int last_year() const { return first_year_ + static_cast<int>(rows_.size()) - 1; }
  bool empty() const { return rows_.empty(); }
  std::size_t size() const { return rows_.size(); }
  bool has_year(int year) const { return year >= first_year_ && year <= last_year(); }
  const AbundanceVector& row(int year) const;
  const std::vector<AbundanceVector>& rows() const { return rows_; }

 private:
  AgeRange ages_;
  int first_year_ = 0;
  std::vector<AbundanceVector> rows_;
};

/// Weight (kg), maturity (fraction) and natural mortality (per year), each
/// per year and per age.
class BiologySeries {
 public:
  BiologySeries() = default;
  BiologySeries(AgeRange ages, int first_year, int last_year);

  const AgeRange& ages() const { return ages_; }
  int first_year() const { return first_year_; }
  int last_year() const { return last_year_; }
  bool has_year(int year) const { return year >= first_year_ && year <= last_year_; }

  std::span<const double> weight(int year) const { return row(weight_, year); }
  std::span<const double> maturity(int year) const { return row(maturity_, year); }
  std::span<const double> natural_mortality(int year) const { return row(mortality_, year); }
  std::span<double> weight(int year) { return row(weight_, year); }
  std::span<double> maturity(int year) { return row(maturity_, year); }
  std::span<double> natural_mortality(int year) { return row(mortality_, year); }

  void validate() const;

 private:
  std::span<const double> row(const std::vector<double>& v, int year) const;
  std::span<double> row(std::vector<double>& v, int year);

  AgeRange ages_;
  int first_year_ = 0;
  int last_year_ = -1;
  std::vector<double> weight_, maturity_, mortality_;
};

enum class FleetKind { commercial_catch, survey };

const char* to_string(FleetKind kind);
FleetKind fleet_kind_from_string(const std::string& s);

/// One data source. Age-structured fleets carry one column per age in
/// `ages`; an aggregate fleet (e.g. an unstratified biomass index) has
/// `ages` empty and exactly one column. Unobserved cells hold kMissing.
struct FleetObservation {
  std::string name;
  FleetKind kind = FleetKind::survey;
  double timing = kMissing;
  int first_year = 0;
  std::vector<int> ages;
  std::vector<std::vector<double>> values;  // [year - first_year][column]

  bool aggregate() const { return ages.empty(); }
  int columns() const { return aggregate() ? 1 : static_cast<int>(ages.size()); }
  int last_year() const { return first_year + static_cast<int>(values.size()) - 1; }
  bool has_year(int year) const { return year >= first_year && year <= last_year(); }
  /// kMissing when the year or age is not covered.
  double value(int year, int age) const;
  double aggregate_value(int year) const;
  void validate() const;
};

struct ObservationSeries {
  int first_year = 0;
  int last_year = -1;
  std::vector<FleetObservation> fleets;

  int years() const { return last_year - first_year + 1; }
  void validate() const;
  /// Copy restricted to years <= last.
  ObservationSeries truncated(int last) const;
  const FleetObservation* find(const std::string& fleet) const;
};

enum class ParameterKind { recruitment, ssb };

const char* to_string(ParameterKind kind);
ParameterKind parameter_kind_from_string(const std::string& s);

struct StockParameterSeries {
  ParameterKind kind = ParameterKind::recruitment;
  int first_year = 0;
  std::vector<double> values;  // kMissing where absent

  int last_year() const { return first_year + static_cast<int>(values.size()) - 1; }
  bool has(int year) const;
  double at(int year) const;
};

struct FeatureVector {
  std::vector<std::string> names;
  std::vector<double> values;
  std::string schema_id;

  std::size_t size() const { return values.size(); }
  bool empty() const { return values.empty(); }
  std::optional<std::size_t> index_of(const std::string& name) const;
  double get(const std::string& name) const;
};

/// One fleet's observations for a single year, as fed to flatten_features.
struct ObservationSlice {
  std::string fleet;
  std::vector<int> ages;  // empty for an aggregate fleet
  std::vector<double> values;
};

ObservationSlice slice_year(const FleetObservation& fleet, int year);

struct FeatureParts {
  std::optional<AbundanceVector> abundance;
  std::vector<std::pair<std::string, double>> parameters;
  std::vector<ObservationSlice> observations;
};

/// Spawning stock biomass in tonnes: sum of weight * maturity * abundance.
double ssb(const AbundanceVector& n, const BiologySeries& bio);
/// Same, with the biology taken from `bio_year` rather than n.year.
double ssb(std::span<const double> n, const BiologySeries& bio, int bio_year);

double recruitment_of(const AbundanceVector& n);

/// Baranov catch equation, per age.
std::vector<double> baranov_catch(std::span<const double> n, std::span<const double> f,
                                  double m);
std::vector<double> baranov_catch(std::span<const double> n, std::span<const double> f,
                                  std::span<const double> m);
/// Single-cohort form; F + M == 0 gives 0.
double baranov_catch(double n, double f, double m);

/// Layout: abundance (N_a<age>, ascending age), then parameters in the given
/// order, then every observation slice in the given order (<fleet>_a<age>
/// ascending, or <fleet> for an aggregate fleet).
FeatureVector flatten_features(const FeatureParts& parts);

std::string schema_id_for(const std::vector<std::string>& names);

}  // namespace stockhybrid
