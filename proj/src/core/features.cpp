#include <algorithm>
#include <cstdio>
#include <unordered_set>

#include "stockhybrid/core.hpp"

namespace stockhybrid {

std::optional<std::size_t> FeatureVector::index_of(const std::string& name) const {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) return std::nullopt;
  return static_cast<std::size_t>(it - names.begin());
}

double FeatureVector::get(const std::string& name) const {
  const auto idx = index_of(name);
  if (!idx) fail(ErrorCode::schema, "feature '" + name + "' not present");
  return values[*idx];
}

ObservationSlice slice_year(const FleetObservation& fleet, int year) {
  ObservationSlice s;
  s.fleet = fleet.name;
  s.ages = fleet.ages;
  if (fleet.aggregate()) {
    s.values = {fleet.aggregate_value(year)};
  } else {
    s.values.reserve(fleet.ages.size());
    for (int age : fleet.ages) s.values.push_back(fleet.value(year, age));
  }
  return s;
}

// FNV-1a over the ordered names.
std::string schema_id_for(const std::vector<std::string>& names) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](unsigned char c) {
    h ^= c;
    h *= 1099511628211ULL;
  };
  for (const auto& n : names) {
    for (unsigned char c : n) mix(c);
    mix('\n');
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "fv1-%016llx", static_cast<unsigned long long>(h));
  return buf;
}

FeatureVector flatten_features(const FeatureParts& parts) {
  FeatureVector fv;
  if (parts.abundance) {
    const auto& n = *parts.abundance;
    for (int age = n.ages.min_age; age <= n.ages.max_age; ++age) {
      fv.names.push_back("N_a" + std::to_string(age));
      fv.values.push_back(n.at_age(age));
    }
  }
  for (const auto& [name, value] : parts.parameters) {
    fv.names.push_back(name);
    fv.values.push_back(value);
  }
  for (const auto& obs : parts.observations) {
    if (obs.ages.empty()) {
      if (obs.values.size() != 1) {
        fail(ErrorCode::schema, "aggregate fleet '" + obs.fleet + "' needs exactly one value");
      }
      fv.names.push_back(obs.fleet);
      fv.values.push_back(obs.values[0]);
      continue;
    }
    if (obs.ages.size() != obs.values.size()) {
      fail(ErrorCode::schema, "fleet '" + obs.fleet + "' ages and values differ in length");
    }
    for (std::size_t i = 0; i < obs.ages.size(); ++i) {
      fv.names.push_back(obs.fleet + "_a" + std::to_string(obs.ages[i]));
      fv.values.push_back(obs.values[i]);
    }
  }
  std::unordered_set<std::string> seen;
  for (const auto& n : fv.names) {
    if (!seen.insert(n).second) fail(ErrorCode::schema, "duplicate feature name '" + n + "'");
  }
  fv.schema_id = schema_id_for(fv.names);
  return fv;
}

}  // namespace stockhybrid
