#include "stockhybrid/core.hpp"

#include <algorithm>
#include <sstream>

namespace stockhybrid {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::ok: return "ok";
    case ErrorCode::invalid_argument: return "invalid argument";
    case ErrorCode::domain: return "domain error";
    case ErrorCode::missing_data: return "missing data";
    case ErrorCode::out_of_range: return "out of range";
    case ErrorCode::schema: return "schema error";
    case ErrorCode::config: return "configuration error";
    case ErrorCode::insufficient_data: return "insufficient data";
    case ErrorCode::not_converged: return "not converged";
    case ErrorCode::unsupported: return "unsupported";
    case ErrorCode::io: return "i/o error";
    case ErrorCode::parse: return "parse error";
    case ErrorCode::empty_report: return "empty report";
    case ErrorCode::internal: return "internal error";
  }
  return "unknown";
}

void AgeRange::validate() const {
  if (min_age < 0) fail(ErrorCode::invalid_argument, "min_age must be >= 0");
  if (max_age <= min_age) fail(ErrorCode::invalid_argument, "max_age must exceed min_age");
}

double AbundanceVector::at_age(int age) const {
  if (!ages.contains(age)) {
    fail(ErrorCode::out_of_range, "age " + std::to_string(age) + " outside abundance vector");
  }
  return values[static_cast<std::size_t>(ages.index(age))];
}

void AbundanceVector::validate() const {
  ages.validate();
  if (static_cast<int>(values.size()) != ages.size()) {
    fail(ErrorCode::invalid_argument, "abundance vector length does not match age range");
  }
  for (double v : values) {
    if (!(v >= 0.0)) fail(ErrorCode::domain, "abundance must be non-negative");
  }
}

void AbundanceMatrix::append(AbundanceVector row) {
  if (!(row.ages == ages_)) fail(ErrorCode::invalid_argument, "row age range differs from matrix");
  if (row.year != first_year_ + static_cast<int>(rows_.size())) {
    fail(ErrorCode::invalid_argument, "abundance rows must be contiguous in year");
  }
  rows_.push_back(std::move(row));
}

const AbundanceVector& AbundanceMatrix::row(int year) const {
  if (!has_year(year)) {
    fail(ErrorCode::out_of_range, "year " + std::to_string(year) + " outside abundance matrix");
  }
  return rows_[static_cast<std::size_t>(year - first_year_)];
}

BiologySeries::BiologySeries(AgeRange ages, int first_year, int last_year)
    : ages_(ages), first_year_(first_year), last_year_(last_year) {
  ages_.validate();
  if (last_year < first_year) fail(ErrorCode::invalid_argument, "empty biology year range");
  const auto cells = static_cast<std::size_t>((last_year - first_year + 1) * ages.size());
  weight_.assign(cells, 0.0);
  maturity_.assign(cells, 0.0);
  mortality_.assign(cells, 0.0);
}

std::span<const double> BiologySeries::row(const std::vector<double>& v, int year) const {
  if (!has_year(year)) {
    fail(ErrorCode::missing_data, "biology has no data for year " + std::to_string(year));
  }
  const auto width = static_cast<std::size_t>(ages_.size());
  return std::span<const double>(v).subspan(static_cast<std::size_t>(year - first_year_) * width,
                                            width);
}

std::span<double> BiologySeries::row(std::vector<double>& v, int year) {
  if (!has_year(year)) {
    fail(ErrorCode::missing_data, "biology has no data for year " + std::to_string(year));
  }
  const auto width = static_cast<std::size_t>(ages_.size());
  return std::span<double>(v).subspan(static_cast<std::size_t>(year - first_year_) * width, width);
}

void BiologySeries::validate() const {
  ages_.validate();
  for (double w : weight_) {
    if (!(w > 0.0)) fail(ErrorCode::domain, "weights must be positive");
  }
  for (double m : maturity_) {
    if (!(m >= 0.0 && m <= 1.0)) fail(ErrorCode::domain, "maturity must lie in [0, 1]");
  }
  for (double m : mortality_) {
    if (!(m >= 0.0)) fail(ErrorCode::domain, "natural mortality must be non-negative");
  }
}

const char* to_string(FleetKind kind) {
  return kind == FleetKind::commercial_catch ? "catch" : "survey";
}

FleetKind fleet_kind_from_string(const std::string& s) {
  if (s == "catch" || s == "commercial_catch") return FleetKind::commercial_catch;
  if (s == "survey") return FleetKind::survey;
  fail(ErrorCode::parse, "unknown fleet kind '" + s + "'");
}

double FleetObservation::value(int year, int age) const {
  if (!has_year(year) || aggregate()) return kMissing;
  const auto it = std::find(ages.begin(), ages.end(), age);
  if (it == ages.end()) return kMissing;
  return values[static_cast<std::size_t>(year - first_year)]
               [static_cast<std::size_t>(it - ages.begin())];
}

double FleetObservation::aggregate_value(int year) const {
  if (!has_year(year) || !aggregate()) return kMissing;
  return values[static_cast<std::size_t>(year - first_year)][0];
}

void FleetObservation::validate() const {
  if (name.empty()) fail(ErrorCode::invalid_argument, "fleet name is empty");
  const bool timed = !is_missing(timing);
  if (kind == FleetKind::survey) {
    if (!timed || timing < 0.0 || timing > 1.0) {
      fail(ErrorCode::invalid_argument, "survey '" + name + "' needs a timing in [0, 1]");
    }
  } else if (timed) {
    fail(ErrorCode::invalid_argument, "catch fleet '" + name + "' must not carry a timing");
  }
  if (!std::is_sorted(ages.begin(), ages.end()) ||
      std::adjacent_find(ages.begin(), ages.end()) != ages.end()) {
    fail(ErrorCode::invalid_argument, "fleet '" + name + "' ages must be strictly increasing");
  }
  for (const auto& row : values) {
    if (static_cast<int>(row.size()) != columns()) {
      fail(ErrorCode::invalid_argument, "fleet '" + name + "' has a ragged value table");
    }
    for (double v : row) {
      if (!is_missing(v) && !(v > 0.0)) {
        fail(ErrorCode::domain, "fleet '" + name + "' has a non-positive observation");
      }
    }
  }
}

void ObservationSeries::validate() const {
  if (last_year < first_year) fail(ErrorCode::invalid_argument, "empty observation year range");
  bool has_catch = false;
  bool has_survey = false;
  for (const auto& f : fleets) {
    f.validate();
    if (f.kind == FleetKind::commercial_catch) has_catch = true;
    if (f.kind == FleetKind::survey) has_survey = true;
    if (!f.values.empty() && (f.first_year < first_year || f.last_year() > last_year)) {
      fail(ErrorCode::invalid_argument, "fleet '" + f.name + "' extends outside the series");
    }
  }
  if (!has_catch) fail(ErrorCode::invalid_argument, "observations need a commercial catch fleet");
  if (!has_survey) fail(ErrorCode::invalid_argument, "observations need a survey fleet");
  for (std::size_t i = 0; i < fleets.size(); ++i) {
    for (std::size_t j = i + 1; j < fleets.size(); ++j) {
      if (fleets[i].name == fleets[j].name) {
        fail(ErrorCode::invalid_argument, "duplicate fleet name '" + fleets[i].name + "'");
      }
    }
  }
}

ObservationSeries ObservationSeries::truncated(int last) const {
  ObservationSeries out;
  out.first_year = first_year;
  out.last_year = std::min(last, last_year);
  for (const auto& f : fleets) {
    FleetObservation g = f;
    const int keep = std::max(0, std::min(f.last_year(), out.last_year) - f.first_year + 1);
    g.values.resize(static_cast<std::size_t>(keep));
    out.fleets.push_back(std::move(g));
  }
  return out;
}

const FleetObservation* ObservationSeries::find(const std::string& fleet) const {
  for (const auto& f : fleets) {
    if (f.name == fleet) return &f;
  }
  return nullptr;
}

const char* to_string(ParameterKind kind) {
  return kind == ParameterKind::recruitment ? "recruitment" : "ssb";
}

ParameterKind parameter_kind_from_string(const std::string& s) {
  if (s == "recruitment") return ParameterKind::recruitment;
  if (s == "ssb") return ParameterKind::ssb;
  fail(ErrorCode::parse, "unknown stock parameter '" + s + "'");
}

bool StockParameterSeries::has(int year) const {
  return year >= first_year && year <= last_year() &&
         !is_missing(values[static_cast<std::size_t>(year - first_year)]);
}

double StockParameterSeries::at(int year) const {
  if (year < first_year || year > last_year()) {
    fail(ErrorCode::out_of_range, "year " + std::to_string(year) + " outside parameter series");
  }
  return values[static_cast<std::size_t>(year - first_year)];
}

double ssb(std::span<const double> n, const BiologySeries& bio, int bio_year) {
  const auto w = bio.weight(bio_year);
  const auto mat = bio.maturity(bio_year);
  if (n.size() != w.size()) fail(ErrorCode::invalid_argument, "abundance/biology age mismatch");
  double total = 0.0;
  for (std::size_t a = 0; a < n.size(); ++a) total += w[a] * mat[a] * n[a];
  return total;
}

double ssb(const AbundanceVector& n, const BiologySeries& bio) {
  if (!(n.ages == bio.ages())) fail(ErrorCode::invalid_argument, "abundance/biology age mismatch");
  return ssb(n.values, bio, n.year);
}

double recruitment_of(const AbundanceVector& n) {
  return n.values.empty() ? 0.0 : n.values.front();
}

double baranov_catch(double n, double f, double m) {
  if (!(n >= 0.0) || !(f >= 0.0) || !(m >= 0.0)) {
    fail(ErrorCode::domain, "Baranov catch needs non-negative N, F and M");
  }
  const double z = f + m;
  if (z == 0.0) return 0.0;
  return f / z * -std::expm1(-z) * n;
}

std::vector<double> baranov_catch(std::span<const double> n, std::span<const double> f,
                                  std::span<const double> m) {
  if (n.size() != f.size() || n.size() != m.size()) {
    fail(ErrorCode::invalid_argument, "Baranov catch inputs differ in length");
  }
  std::vector<double> out(n.size());
  for (std::size_t a = 0; a < n.size(); ++a) out[a] = baranov_catch(n[a], f[a], m[a]);
  return out;
}

std::vector<double> baranov_catch(std::span<const double> n, std::span<const double> f,
                                  double m) {
  const std::vector<double> mv(n.size(), m);
  return baranov_catch(n, f, mv);
}

}  // namespace stockhybrid
