#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>

#include "stockhybrid/io.hpp"

namespace stockhybrid::io {
namespace {

const std::vector<std::string> kReportColumns = {
    "record",      "stock",       "task",   "target",  "variant",  "label_policy", "correction",
    "k",           "selected",    "model_year", "target_year", "baseline", "hybrid", "label",
    "ml_rmse",     "ml_r2",       "baseline_rmse", "baseline_r2", "reason"};

std::string clean(std::string s) {
  for (auto& c : s) {
    if (c == '\t' || c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

int to_int(const std::string& s, const std::string& where) {
  const double v = parse_number(s, where);
  if (is_missing(v) || v != static_cast<int>(v)) {
    fail(ErrorCode::parse, where + ": '" + s + "' is not an integer");
  }
  return static_cast<int>(v);
}

std::string at(const Table& t, std::size_t r) { return t.path + ":" + std::to_string(t.lines[r]); }

// Right-aligned columns; the first column is left-aligned.
std::string align(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width;
  for (const auto& row : rows) {
    if (width.size() < row.size()) width.resize(row.size(), 0);
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::ostringstream out;
  for (const auto& row : rows) {
    std::string line;
    for (std::size_t c = 0; c < row.size(); ++c) {
      const std::string pad(width[c] - row[c].size(), ' ');
      if (c > 0) line += "  ";
      line += c == 0 ? row[c] + pad : pad + row[c];
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out << line << '\n';
  }
  return out.str();
}

}  // namespace

std::string report_tsv(const std::vector<hybrid::BacktestReport>& reports) {
  std::ostringstream out;
  for (std::size_t i = 0; i < kReportColumns.size(); ++i) {
    out << (i ? "\t" : "") << kReportColumns[i];
  }
  out << '\n';
  for (const auto& r : reports) {
    const auto& s = r.spec;
    const std::string head = r.stock + '\t' + hybrid::to_string(s.task) + '\t' +
                             to_string(s.target) + '\t' + hybrid::to_string(s.variant) + '\t' +
                             hybrid::to_string(s.label_policy) + '\t' +
                             hybrid::to_string(s.correction) + '\t' + std::to_string(r.k) + '\t' +
                             (r.selected ? "1" : "0");
    out << "summary\t" << head << "\tNA\tNA\tNA\tNA\tNA\t" << format_number(r.ml_rmse) << '\t'
        << format_number(r.ml_r2) << '\t' << format_number(r.baseline_rmse) << '\t'
        << format_number(r.baseline_r2) << "\tNA\n";
    for (const auto& row : r.rows) {
      out << "row\t" << head << '\t' << row.model_year << '\t' << row.target_year << '\t'
          << format_number(row.baseline) << '\t' << format_number(row.hybrid) << '\t'
          << format_number(row.label) << "\tNA\tNA\tNA\tNA\tNA\n";
    }
    for (const auto& sk : r.skipped) {
      out << "skipped\t" << head << '\t' << sk.model_year
          << "\tNA\tNA\tNA\tNA\tNA\tNA\tNA\tNA\t" << clean(sk.reason) << '\n';
    }
  }
  return out.str();
}

std::vector<hybrid::BacktestReport> parse_report_tsv(const std::string& text) {
  const auto t = parse_table(text, '\t', "report.tsv");
  std::vector<std::size_t> col;
  for (const auto& name : kReportColumns) col.push_back(t.column(name));
  std::vector<hybrid::BacktestReport> reports;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    auto get = [&](int i) -> const std::string& { return row[col[static_cast<std::size_t>(i)]]; };
    auto num = [&](int i) { return parse_number(get(i), at(t, r) + ": " + kReportColumns[i]); };
    const std::string& record = get(0);

    hybrid::TaskSpec spec;
    try {
      spec.task = hybrid::task_from_string(get(2));
      spec.target = parameter_kind_from_string(get(3));
      spec.variant = hybrid::feature_variant_from_string(get(4));
      spec.label_policy = hybrid::label_policy_from_string(get(5));
      spec.correction = hybrid::correction_from_string(get(6));
    } catch (const Error& e) {
      fail(ErrorCode::schema, at(t, r) + ": " + e.what());
    }
    const int k = to_int(get(7), at(t, r) + ": k");

    if (record == "summary") {
      hybrid::BacktestReport rep;
      rep.stock = get(1);
      rep.spec = spec;
      rep.k = k;
      rep.selected = get(8) == "1";
      rep.ml_rmse = num(14);
      rep.ml_r2 = num(15);
      rep.baseline_rmse = num(16);
      rep.baseline_r2 = num(17);
      reports.push_back(std::move(rep));
      continue;
    }
    if (reports.empty() || !(reports.back().spec == spec) || reports.back().stock != get(1)) {
      fail(ErrorCode::schema, at(t, r) + ": " + record + " record without its summary record");
    }
    auto& rep = reports.back();
    if (record == "row") {
      rep.rows.push_back({to_int(get(9), at(t, r) + ": model_year"),
                          to_int(get(10), at(t, r) + ": target_year"), num(11), num(12),
                          num(13)});
    } else if (record == "skipped") {
      rep.skipped.push_back({to_int(get(9), at(t, r) + ": model_year"), get(18)});
    } else {
      fail(ErrorCode::schema, at(t, r) + ": unknown record type '" + record + "'");
    }
  }
  return reports;
}

std::string format_rmse(double v) {
  if (is_missing(v)) return "NA";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.0f", v);
  return buf;
}

std::string format_r2(double v) {
  if (is_missing(v)) return "NA";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string render_reports(const std::vector<hybrid::BacktestReport>& reports) {
  if (reports.empty()) fail(ErrorCode::empty_report, "no reports to render");
  std::vector<std::vector<std::string>> summary = {
      {"stock", "task", "target", "variant", "labels", "correction", "k", "ML RMSE", "ML R2",
       "baseline RMSE", "baseline R2", "selected"}};
  for (const auto& r : reports) {
    summary.push_back({r.stock, hybrid::to_string(r.spec.task), to_string(r.spec.target),
                       hybrid::to_string(r.spec.variant), hybrid::to_string(r.spec.label_policy),
                       hybrid::to_string(r.spec.correction), std::to_string(r.k),
                       format_rmse(r.ml_rmse), format_r2(r.ml_r2), format_rmse(r.baseline_rmse),
                       format_r2(r.baseline_r2), r.selected ? "*" : ""});
  }
  std::ostringstream out;
  out << align(summary);
  for (const auto& r : reports) {
    out << '\n' << r.stock << ' ' << r.spec.id() << '\n';
    std::vector<std::vector<std::string>> rows = {
        {"model year", "target year", "baseline", "hybrid", "label"}};
    for (const auto& row : r.rows) {
      rows.push_back({std::to_string(row.model_year), std::to_string(row.target_year),
                      format_rmse(row.baseline), format_rmse(row.hybrid), format_rmse(row.label)});
    }
    out << align(rows);
    for (const auto& sk : r.skipped) {
      out << "skipped " << sk.model_year << ": " << sk.reason << '\n';
    }
  }
  return out.str();
}

std::string retro_tsv(const assess::RetrospectiveMatrix& retro) {
  std::ostringstream out;
  out << "quantity\tyear";
  for (int t : retro.model_years) out << "\tM" << t;
  out << "\nconverged\tNA";
  for (bool c : retro.converged) out << '\t' << (c ? 1 : 0);
  out << '\n';
  const int last = retro.model_years.empty() ? retro.first_year - 1 : retro.model_years.back();
  for (auto kind : {ParameterKind::recruitment, ParameterKind::ssb}) {
    for (int y = retro.first_year; y <= last; ++y) {
      out << to_string(kind) << '\t' << y;
      for (std::size_t m = 0; m < retro.model_years.size(); ++m) {
        const auto& s = retro.series(kind, m);
        out << '\t' << format_number(s.has(y) ? s.at(y) : kMissing);
      }
      out << '\n';
    }
  }
  return out.str();
}

assess::RetrospectiveMatrix parse_retro_tsv(const std::string& text) {
  const auto t = parse_table(text, '\t', "retro.tsv");
  if (t.header.size() < 2 || t.header[0] != "quantity" || t.header[1] != "year") {
    fail(ErrorCode::schema, "retro.tsv: header must start with quantity, year");
  }
  assess::RetrospectiveMatrix retro;
  for (std::size_t c = 2; c < t.header.size(); ++c) {
    const auto& h = t.header[c];
    if (h.size() < 2 || h[0] != 'M') fail(ErrorCode::schema, "retro.tsv: bad column '" + h + "'");
    retro.model_years.push_back(to_int(h.substr(1), "retro.tsv: column " + h));
  }
  const auto models = retro.model_years.size();
  retro.converged.assign(models, false);
  bool first_seen = false;
  std::map<std::pair<int, int>, std::vector<double>> cells;  // (kind, year) -> per model
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    if (row[0] == "converged") {
      for (std::size_t m = 0; m < models; ++m) retro.converged[m] = row[m + 2] == "1";
      continue;
    }
    ParameterKind kind;
    try {
      kind = parameter_kind_from_string(row[0]);
    } catch (const Error& e) {
      fail(ErrorCode::schema, at(t, r) + ": " + e.what());
    }
    const int year = to_int(row[1], at(t, r) + ": year");
    if (!first_seen) {
      retro.first_year = year;
      first_seen = true;
    }
    std::vector<double> v;
    for (std::size_t m = 0; m < models; ++m) {
      v.push_back(parse_number(row[m + 2], at(t, r) + ": " + t.header[m + 2]));
    }
    cells[{static_cast<int>(kind), year}] = std::move(v);
  }
  for (std::size_t m = 0; m < models; ++m) {
    StockParameterSeries rec{ParameterKind::recruitment, retro.first_year, {}};
    StockParameterSeries spawners{ParameterKind::ssb, retro.first_year, {}};
    for (int y = retro.first_year; y <= retro.model_years[m]; ++y) {
      auto value = [&](ParameterKind k) {
        const auto it = cells.find({static_cast<int>(k), y});
        return it == cells.end() ? kMissing : it->second[m];
      };
      rec.values.push_back(value(ParameterKind::recruitment));
      spawners.values.push_back(value(ParameterKind::ssb));
    }
    retro.recruitment.push_back(std::move(rec));
    retro.ssb.push_back(std::move(spawners));
  }
  return retro;
}

std::string shap_tsv(const std::vector<ShapSample>& samples) {
  std::ostringstream out;
  out << "model\tsample\tfeature\tfeature_value\tphi\n";
  for (const auto& s : samples) {
    const auto& a = s.attribution;
    for (std::size_t f = 0; f < a.names.size(); ++f) {
      out << s.model << '\t' << s.sample << '\t' << a.names[f] << '\t'
          << format_number(s.features.values[f]) << '\t' << format_number(a.phi[f]) << '\n';
    }
    out << s.model << '\t' << s.sample << "\t(base)\tNA\t" << format_number(a.base_value) << '\n';
    out << s.model << '\t' << s.sample << "\t(prediction)\tNA\t" << format_number(a.prediction)
        << '\n';
  }
  return out.str();
}

std::vector<ShapSample> parse_shap_tsv(const std::string& text) {
  const auto t = parse_table(text, '\t', "shap.tsv");
  const auto c_model = t.column("model");
  const auto c_sample = t.column("sample");
  const auto c_feature = t.column("feature");
  const auto c_value = t.column("feature_value");
  const auto c_phi = t.column("phi");
  std::vector<ShapSample> samples;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    if (samples.empty() || samples.back().model != row[c_model] ||
        samples.back().sample != row[c_sample]) {
      samples.push_back({row[c_model], row[c_sample], {}, {}});
    }
    auto& s = samples.back();
    const double phi = parse_number(row[c_phi], at(t, r) + ": phi");
    if (row[c_feature] == "(base)") {
      s.attribution.base_value = phi;
    } else if (row[c_feature] == "(prediction)") {
      s.attribution.prediction = phi;
    } else {
      s.features.names.push_back(row[c_feature]);
      s.features.values.push_back(parse_number(row[c_value], at(t, r) + ": feature_value"));
      s.attribution.names.push_back(row[c_feature]);
      s.attribution.phi.push_back(phi);
    }
  }
  for (auto& s : samples) s.features.schema_id = schema_id_for(s.features.names);
  return samples;
}

std::string importance_tsv(const std::vector<ModelImportance>& models) {
  std::ostringstream out;
  out << "model\trank\tfeature\tmean_abs_phi\n";
  for (const auto& m : models) {
    for (std::size_t i = 0; i < m.ranking.size(); ++i) {
      out << m.model << '\t' << i + 1 << '\t' << m.ranking[i].feature << '\t'
          << format_number(m.ranking[i].mean_abs_phi) << '\n';
    }
  }
  return out.str();
}

}  // namespace stockhybrid::io
