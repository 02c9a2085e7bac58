// Text format for fitted assessments (one record per line, whitespace
// separated, doubles printed with 17 significant digits):
//
//   stockhybrid-assessment 1
//   ages <min> <max> <plus_group 0|1>
//   recruitment <random_walk|beverton_holt>
//   forecast_policy <status_quo|mean_last_3>
//   optimizer <max_evaluations> <tolerance> <restarts> <jitter> <polish_rounds> <seed>
//   filter <variance_floor> <prior_variance> <min_years>
//   years <first_year> <last_data_year>
//   fit <converged 0|1> <nll> <evaluations>
//   parameters <count>
//   <name> <value>                       (count lines)
//   selectivity|natural_mortality|weight|maturity <one value per age>
//   beverton_holt <alpha> <beta>
//   states <filtered|smoothed> <count> <dim>
//   <year> <mean x dim> <cov x dim*dim, row major>   (count lines)
//   end

#include <cstdio>
#include <sstream>

#include "stockhybrid/assessor.hpp"

namespace stockhybrid::assess {
namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_vector(std::ostringstream& out, const char* key, const std::vector<double>& v) {
  out << key;
  for (double x : v) out << ' ' << num(x);
  out << '\n';
}

void write_states(std::ostringstream& out, const char* key, const std::vector<StateEstimate>& s,
                  int dim) {
  out << "states " << key << ' ' << s.size() << ' ' << dim << '\n';
  for (const auto& e : s) {
    out << e.year;
    for (int i = 0; i < dim; ++i) out << ' ' << num(e.mean[i]);
    for (int i = 0; i < dim; ++i) {
      for (int j = 0; j < dim; ++j) out << ' ' << num(e.cov(i, j));
    }
    out << '\n';
  }
}

class Reader {
 public:
  explicit Reader(const std::string& text) : in_(text) {}

  std::istringstream next() {
    std::string l;
    while (std::getline(in_, l)) {
      ++line_no_;
      if (!l.empty()) break;
    }
    return std::istringstream(l);
  }

  std::istringstream line(const std::string& expected_key) {
    auto s = next();
    std::string key;
    s >> key;
    if (key != expected_key) {
      fail(ErrorCode::parse, "assessment text line " + std::to_string(line_no_) + ": expected '" +
                                 expected_key + "', found '" + key + "'");
    }
    return s;
  }

  template <typename T>
  static T get(std::istringstream& s, const char* what) {
    T v{};
    if (!(s >> v)) fail(ErrorCode::parse, std::string("assessment text: bad ") + what);
    return v;
  }

  std::vector<double> vector(const std::string& key, int count) {
    auto s = line(key);
    std::vector<double> v;
    for (int i = 0; i < count; ++i) v.push_back(get<double>(s, key.c_str()));
    return v;
  }

  std::vector<StateEstimate> states(const std::string& kind, StateKind tag) {
    auto header = line("states");
    if (get<std::string>(header, "state kind") != kind) {
      fail(ErrorCode::parse, "assessment text: expected " + kind + " states");
    }
    const int count = get<int>(header, "state count");
    const int dim = get<int>(header, "state dim");
    std::vector<StateEstimate> out;
    for (int k = 0; k < count; ++k) {
      std::string l;
      std::getline(in_, l);
      ++line_no_;
      std::istringstream s(l);
      StateEstimate e;
      e.kind = tag;
      e.year = get<int>(s, "state year");
      e.mean.resize(dim);
      e.cov.resize(dim, dim);
      for (int i = 0; i < dim; ++i) e.mean[i] = get<double>(s, "state mean");
      for (int i = 0; i < dim; ++i) {
        for (int j = 0; j < dim; ++j) e.cov(i, j) = get<double>(s, "state covariance");
      }
      out.push_back(std::move(e));
    }
    return out;
  }

 private:
  std::istringstream in_;
  int line_no_ = 0;
};

}  // namespace

std::string to_text(const FittedAssessment& m) {
  std::ostringstream out;
  const auto& c = m.config;
  out << "stockhybrid-assessment 1\n";
  out << "ages " << c.ages.min_age << ' ' << c.ages.max_age << ' ' << (c.ages.plus_group ? 1 : 0)
      << '\n';
  out << "recruitment " << to_string(c.recruitment) << '\n';
  out << "forecast_policy " << to_string(c.forecast_policy) << '\n';
  out << "optimizer " << c.optimizer.max_evaluations << ' ' << num(c.optimizer.tolerance) << ' '
      << c.optimizer.restarts << ' ' << num(c.optimizer.jitter) << ' '
      << c.optimizer.polish_rounds << ' ' << c.optimizer.seed << '\n';
  out << "filter " << num(c.variance_floor) << ' ' << num(c.prior_variance) << ' ' << c.min_years
      << '\n';
  out << "years " << m.first_year << ' ' << m.last_data_year << '\n';
  out << "fit " << (m.converged ? 1 : 0) << ' ' << num(m.nll) << ' ' << m.evaluations << '\n';
  out << "parameters " << m.theta.size() << '\n';
  for (std::size_t i = 0; i < m.theta.size(); ++i) {
    out << m.parameter_names[i] << ' ' << num(m.theta[i]) << '\n';
  }
  write_vector(out, "selectivity", m.selectivity);
  write_vector(out, "natural_mortality", m.natural_mortality);
  write_vector(out, "weight", m.weight);
  write_vector(out, "maturity", m.maturity);
  out << "beverton_holt " << num(m.bh_alpha) << ' ' << num(m.bh_beta) << '\n';
  const int dim = c.ages.size() + 1;
  write_states(out, "filtered", m.filtered, dim);
  write_states(out, "smoothed", m.smoothed, dim);
  out << "end\n";
  return out.str();
}

FittedAssessment assessment_from_text(const std::string& text) {
  Reader r(text);
  FittedAssessment m;
  {
    auto s = r.line("stockhybrid-assessment");
    if (Reader::get<int>(s, "version") != 1) {
      fail(ErrorCode::parse, "unsupported assessment text version");
    }
  }
  auto& c = m.config;
  {
    auto s = r.line("ages");
    c.ages.min_age = Reader::get<int>(s, "min age");
    c.ages.max_age = Reader::get<int>(s, "max age");
    c.ages.plus_group = Reader::get<int>(s, "plus group") != 0;
  }
  {
    auto s = r.line("recruitment");
    c.recruitment = recruitment_model_from_string(Reader::get<std::string>(s, "recruitment"));
  }
  {
    auto s = r.line("forecast_policy");
    c.forecast_policy = forecast_policy_from_string(Reader::get<std::string>(s, "policy"));
  }
  {
    auto s = r.line("optimizer");
    c.optimizer.max_evaluations = Reader::get<int>(s, "max evaluations");
    c.optimizer.tolerance = Reader::get<double>(s, "tolerance");
    c.optimizer.restarts = Reader::get<int>(s, "restarts");
    c.optimizer.jitter = Reader::get<double>(s, "jitter");
    c.optimizer.polish_rounds = Reader::get<int>(s, "polish rounds");
    c.optimizer.seed = Reader::get<std::uint64_t>(s, "seed");
  }
  {
    auto s = r.line("filter");
    c.variance_floor = Reader::get<double>(s, "variance floor");
    c.prior_variance = Reader::get<double>(s, "prior variance");
    c.min_years = Reader::get<int>(s, "min years");
  }
  c.validate();
  {
    auto s = r.line("years");
    m.first_year = Reader::get<int>(s, "first year");
    m.last_data_year = Reader::get<int>(s, "last data year");
  }
  {
    auto s = r.line("fit");
    m.converged = Reader::get<int>(s, "converged") != 0;
    m.nll = Reader::get<double>(s, "nll");
    m.evaluations = Reader::get<int>(s, "evaluations");
  }
  int count = 0;
  {
    auto s = r.line("parameters");
    count = Reader::get<int>(s, "parameter count");
  }
  for (int i = 0; i < count; ++i) {
    auto s = r.next();
    m.parameter_names.push_back(Reader::get<std::string>(s, "parameter name"));
    m.theta.push_back(Reader::get<double>(s, "parameter value"));
  }
  const int width = c.ages.size();
  m.selectivity = r.vector("selectivity", width);
  m.natural_mortality = r.vector("natural_mortality", width);
  m.weight = r.vector("weight", width);
  m.maturity = r.vector("maturity", width);
  {
    auto s = r.line("beverton_holt");
    m.bh_alpha = Reader::get<double>(s, "alpha");
    m.bh_beta = Reader::get<double>(s, "beta");
  }
  m.filtered = r.states("filtered", StateKind::filtered);
  m.smoothed = r.states("smoothed", StateKind::smoothed);
  r.line("end");
  const auto years = static_cast<std::size_t>(m.last_data_year - m.first_year + 1);
  if (m.filtered.size() != years || (m.converged && m.smoothed.size() != years)) {
    fail(ErrorCode::parse, "assessment text: state count does not match the fitted years");
  }
  return m;
}

}  // namespace stockhybrid::assess
