#include <cmath>
#include <sstream>

#include "stockhybrid/assessor.hpp"

namespace stockhybrid::assess {

const StockParameterSeries& RetrospectiveMatrix::series(ParameterKind kind,
                                                        std::size_t model) const {
  return kind == ParameterKind::recruitment ? recruitment.at(model) : ssb.at(model);
}

int RetrospectiveMatrix::index_of(int model_year) const {
  for (std::size_t i = 0; i < model_years.size(); ++i) {
    if (model_years[i] == model_year) return static_cast<int>(i);
  }
  return -1;
}

RetrospectiveMatrix retrospective_matrix(const BiologySeries& bio, int first_year, int first_t,
                                         int last_t, const FitProvider& provider) {
  RetrospectiveMatrix retro;
  retro.first_year = first_year;
  for (int t = first_t; t <= last_t; ++t) {
    const auto model = provider(t);
    StockParameterSeries rec{ParameterKind::recruitment, first_year, {}};
    StockParameterSeries spawners{ParameterKind::ssb, first_year, {}};
    const bool ok = model && model->converged;
    for (int y = first_year; y <= t; ++y) {
      if (!ok) {
        rec.values.push_back(kMissing);
        spawners.values.push_back(kMissing);
        continue;
      }
      const auto n = estimate(*model, y);
      rec.values.push_back(derive_parameter(n, bio, ParameterKind::recruitment));
      spawners.values.push_back(derive_parameter(n, bio, ParameterKind::ssb));
    }
    retro.model_years.push_back(t);
    retro.converged.push_back(ok);
    retro.recruitment.push_back(std::move(rec));
    retro.ssb.push_back(std::move(spawners));
  }
  return retro;
}

RetrospectiveMatrix retrospective_matrix(const ObservationSeries& obs, const BiologySeries& bio,
                                         const AssessorConfig& cfg, int first_t) {
  if (first_t - obs.first_year + 1 < cfg.min_years) {
    fail(ErrorCode::insufficient_data, "first retrospective year leaves fewer than " +
                                           std::to_string(cfg.min_years) + " years of data");
  }
  auto provider = [&](int t) {
    return std::make_shared<const FittedAssessment>(fit(obs.truncated(t), bio, cfg));
  };
  return retrospective_matrix(bio, obs.first_year, first_t, obs.last_year, provider);
}

double mohns_rho(const RetrospectiveMatrix& retro, ParameterKind kind, int peels,
                 std::vector<std::string>* warnings) {
  if (peels < 1) fail(ErrorCode::invalid_argument, "Mohn's rho needs at least one peel");
  if (peels >= static_cast<int>(retro.model_years.size())) {
    fail(ErrorCode::invalid_argument, "Mohn's rho needs more models than peels");
  }
  const std::size_t final_index = retro.model_years.size() - 1;
  const int final_year = retro.model_years.back();
  const auto& reference = retro.series(kind, final_index);
  double sum = 0.0;
  int used = 0;
  for (int p = 1; p <= peels; ++p) {
    const int year = final_year - p;
    const int idx = retro.index_of(year);
    std::ostringstream why;
    if (idx < 0 || !retro.converged[static_cast<std::size_t>(idx)] ||
        !retro.converged[final_index]) {
      why << "peel " << p << " skipped: model " << year << " unavailable";
    } else {
      const double terminal = retro.series(kind, static_cast<std::size_t>(idx)).at(year);
      const double ref = reference.at(year);
      if (!(ref != 0.0) || is_missing(ref) || is_missing(terminal)) {
        why << "peel " << p << " skipped: zero or missing reference for year " << year;
      } else {
        sum += (terminal - ref) / ref;
        ++used;
        continue;
      }
    }
    if (warnings) warnings->push_back(why.str());
  }
  if (used == 0) fail(ErrorCode::insufficient_data, "no usable peels for Mohn's rho");
  return sum / used;
}

}  // namespace stockhybrid::assess
