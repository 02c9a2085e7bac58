#include <algorithm>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>

#include "stockhybrid/io.hpp"

namespace stockhybrid::io {
namespace {

std::string where(const Table& t, std::size_t row, const std::string& column) {
  return t.path + ":" + std::to_string(t.lines[row]) + ": column '" + column + "'";
}

int parse_int(const std::string& s, const std::string& at) {
  std::size_t used = 0;
  int v = 0;
  try {
    v = std::stoi(s, &used);
  } catch (const std::exception&) {
    fail(ErrorCode::parse, at + ": '" + s + "' is not an integer");
  }
  if (used != s.size()) fail(ErrorCode::parse, at + ": '" + s + "' is not an integer");
  return v;
}

void require_file(const std::string& path, const std::string& role) {
  if (!std::filesystem::exists(path)) {
    fail(ErrorCode::missing_data, "missing " + role + " input file: '" + path + "'");
  }
}

}  // namespace

ObservationSeries parse_observations(const Table& t) {
  const auto c_fleet = t.column("fleet");
  const auto c_kind = t.column("kind");
  const auto c_timing = t.column("timing");
  const auto c_year = t.column("year");
  const auto c_age = t.column("age");
  const auto c_value = t.column("value");

  struct Cell {
    int year;
    std::optional<int> age;
    double value;
  };
  struct Pending {
    FleetKind kind;
    double timing;
    std::vector<Cell> cells;
    std::set<std::pair<int, int>> seen;
    bool aggregate = false;
  };
  std::vector<std::string> order;
  std::map<std::string, Pending> fleets;

  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const std::string& name = row[c_fleet];
    if (name.empty()) fail(ErrorCode::schema, where(t, r, "fleet") + ": empty fleet name");
    FleetKind kind;
    try {
      kind = fleet_kind_from_string(row[c_kind]);
    } catch (const Error& e) {
      fail(ErrorCode::schema, where(t, r, "kind") + ": " + e.what());
    }
    const double timing =
        row[c_timing].empty() ? kMissing : parse_number(row[c_timing], where(t, r, "timing"));
    const int year = parse_int(row[c_year], where(t, r, "year"));
    std::optional<int> age;
    if (!row[c_age].empty()) age = parse_int(row[c_age], where(t, r, "age"));
    const double value = parse_number(row[c_value], where(t, r, "value"));
    if (!is_missing(value) && !(value > 0.0)) {
      fail(ErrorCode::domain, where(t, r, "value") + ": observations must be positive (got " +
                                  row[c_value] + ")");
    }

    auto it = fleets.find(name);
    if (it == fleets.end()) {
      order.push_back(name);
      it = fleets.emplace(name, Pending{kind, timing, {}, {}, !age.has_value()}).first;
    }
    auto& f = it->second;
    const bool same_timing =
        (is_missing(f.timing) && is_missing(timing)) || f.timing == timing;
    if (f.kind != kind || !same_timing) {
      fail(ErrorCode::schema,
           where(t, r, "kind") + ": fleet '" + name + "' changes kind or timing");
    }
    if (f.aggregate != !age.has_value()) {
      fail(ErrorCode::schema,
           where(t, r, "age") + ": fleet '" + name + "' mixes aggregate and per-age rows");
    }
    if (!f.seen.insert({year, age.value_or(-1)}).second) {
      fail(ErrorCode::schema, where(t, r, "year") + ": duplicate record for fleet '" + name + "'");
    }
    f.cells.push_back({year, age, value});
  }

  ObservationSeries obs;
  obs.first_year = std::numeric_limits<int>::max();
  obs.last_year = std::numeric_limits<int>::min();
  for (const auto& name : order) {
    const auto& p = fleets.at(name);
    FleetObservation f;
    f.name = name;
    f.kind = p.kind;
    f.timing = p.timing;
    int first = std::numeric_limits<int>::max();
    int last = std::numeric_limits<int>::min();
    std::set<int> ages;
    for (const auto& c : p.cells) {
      first = std::min(first, c.year);
      last = std::max(last, c.year);
      if (c.age) ages.insert(*c.age);
    }
    f.first_year = first;
    f.ages.assign(ages.begin(), ages.end());
    f.values.assign(static_cast<std::size_t>(last - first + 1),
                    std::vector<double>(static_cast<std::size_t>(f.columns()), kMissing));
    for (const auto& c : p.cells) {
      const auto col = c.age ? static_cast<std::size_t>(
                                   std::lower_bound(f.ages.begin(), f.ages.end(), *c.age) -
                                   f.ages.begin())
                             : std::size_t{0};
      f.values[static_cast<std::size_t>(c.year - first)][col] = c.value;
    }
    obs.first_year = std::min(obs.first_year, first);
    obs.last_year = std::max(obs.last_year, last);
    obs.fleets.push_back(std::move(f));
  }
  if (obs.fleets.empty()) fail(ErrorCode::schema, t.path + ": no observations");
  try {
    obs.validate();
  } catch (const Error& e) {
    fail(e.code(), t.path + ": " + e.what());
  }
  return obs;
}

BiologySeries parse_biology(const Table& t, const AgeRange& ages) {
  ages.validate();
  const auto c_q = t.column("quantity");
  const auto c_year = t.column("year");
  const auto c_age = t.column("age");
  const auto c_value = t.column("value");
  if (t.rows.empty()) fail(ErrorCode::missing_data, t.path + ": biology file has no records");

  int first = std::numeric_limits<int>::max();
  int last = std::numeric_limits<int>::min();
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const int y = parse_int(t.rows[r][c_year], where(t, r, "year"));
    first = std::min(first, y);
    last = std::max(last, y);
  }
  BiologySeries bio(ages, first, last);
  const char* quantities[] = {"weight", "maturity", "natural_mortality"};
  std::set<std::tuple<int, int, int>> seen;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    int q = -1;
    for (int i = 0; i < 3; ++i) {
      if (row[c_q] == quantities[i]) q = i;
    }
    if (q < 0) {
      fail(ErrorCode::schema, where(t, r, "quantity") + ": unknown quantity '" + row[c_q] +
                                  "' (expected weight, maturity or natural_mortality)");
    }
    const int year = parse_int(row[c_year], where(t, r, "year"));
    const int age = parse_int(row[c_age], where(t, r, "age"));
    if (!ages.contains(age)) {
      fail(ErrorCode::schema, where(t, r, "age") + ": age " + std::to_string(age) +
                                  " outside the configured age range");
    }
    const double v = parse_number(row[c_value], where(t, r, "value"));
    if (is_missing(v)) fail(ErrorCode::missing_data, where(t, r, "value") + ": value is NA");
    if (!seen.insert({q, year, age}).second) {
      fail(ErrorCode::schema, where(t, r, "quantity") + ": duplicate record");
    }
    auto span = q == 0 ? bio.weight(year) : q == 1 ? bio.maturity(year) : bio.natural_mortality(year);
    span[static_cast<std::size_t>(ages.index(age))] = v;
  }
  for (int q = 0; q < 3; ++q) {
    int count = 0;
    for (const auto& s : seen) count += std::get<0>(s) == q;
    if (count == 0) {
      fail(ErrorCode::missing_data, std::string("missing input: ") + quantities[q] +
                                        " (no records in biology file " + t.path + ")");
    }
    for (int y = first; y <= last; ++y) {
      for (int a = ages.min_age; a <= ages.max_age; ++a) {
        if (!seen.count({q, y, a})) {
          fail(ErrorCode::missing_data, t.path + ": no " + quantities[q] + " for year " +
                                            std::to_string(y) + " age " + std::to_string(a));
        }
      }
    }
  }
  try {
    bio.validate();
  } catch (const Error& e) {
    fail(e.code(), t.path + ": " + e.what());
  }
  return bio;
}

ObservationSeries load_observations(const std::string& path) {
  require_file(path, "observations");
  return parse_observations(read_table(path, ','));
}

BiologySeries load_biology(const std::string& path, const AgeRange& ages) {
  require_file(path, "biology");
  return parse_biology(read_table(path, ','), ages);
}

StockData load_stock(const std::string& observations_path, const std::string& biology_path,
                     const AgeRange& ages) {
  StockData d;
  d.observations = load_observations(observations_path);
  d.biology = load_biology(biology_path, ages);
  if (d.biology.first_year() > d.observations.first_year ||
      d.biology.last_year() < d.observations.last_year) {
    fail(ErrorCode::missing_data, "biology file '" + biology_path +
                                      "' does not cover every observation year");
  }
  return d;
}

std::string observations_csv(const ObservationSeries& obs) {
  std::ostringstream out;
  out << "fleet,kind,timing,year,age,value\n";
  for (const auto& f : obs.fleets) {
    const std::string timing = is_missing(f.timing) ? "" : format_number(f.timing);
    for (int y = f.first_year; y <= f.last_year(); ++y) {
      const auto& row = f.values[static_cast<std::size_t>(y - f.first_year)];
      for (int c = 0; c < f.columns(); ++c) {
        out << f.name << ',' << to_string(f.kind) << ',' << timing << ',' << y << ',';
        if (!f.aggregate()) out << f.ages[static_cast<std::size_t>(c)];
        out << ',' << format_number(row[static_cast<std::size_t>(c)]) << '\n';
      }
    }
  }
  return out.str();
}

std::string biology_csv(const BiologySeries& bio) {
  std::ostringstream out;
  out << "quantity,year,age,value\n";
  const auto& ages = bio.ages();
  auto emit = [&](const char* q, auto get) {
    for (int y = bio.first_year(); y <= bio.last_year(); ++y) {
      const auto row = get(y);
      for (int a = ages.min_age; a <= ages.max_age; ++a) {
        out << q << ',' << y << ',' << a << ','
            << format_number(row[static_cast<std::size_t>(ages.index(a))]) << '\n';
      }
    }
  };
  emit("weight", [&](int y) { return bio.weight(y); });
  emit("maturity", [&](int y) { return bio.maturity(y); });
  emit("natural_mortality", [&](int y) { return bio.natural_mortality(y); });
  return out.str();
}

std::string truth_csv(const sim::TrueTrajectory& truth) {
  std::ostringstream out;
  out << "year,age,abundance,fishing_mortality\n";
  const auto& ages = truth.abundance.ages();
  for (const auto& row : truth.abundance.rows()) {
    const auto& f =
        truth.fishing_mortality[static_cast<std::size_t>(row.year - truth.abundance.first_year())];
    for (int a = ages.min_age; a <= ages.max_age; ++a) {
      const auto i = static_cast<std::size_t>(ages.index(a));
      out << row.year << ',' << a << ',' << format_number(row.values[i]) << ','
          << format_number(f[i]) << '\n';
    }
  }
  return out.str();
}

std::string truth_stock_csv(const sim::TrueTrajectory& truth) {
  std::ostringstream out;
  out << "year,recruitment,ssb,f,environment\n";
  const int first = truth.abundance.first_year();
  for (int y = first; y <= truth.abundance.last_year(); ++y) {
    const auto i = static_cast<std::size_t>(y - first);
    out << y << ',' << format_number(truth.recruitment.at(y)) << ','
        << format_number(truth.ssb.at(y)) << ',' << format_number(truth.f[i]) << ','
        << format_number(truth.environment[i]) << '\n';
  }
  return out.str();
}

}  // namespace stockhybrid::io
