#include <sstream>

#include "stockhybrid/hybrid.hpp"

namespace stockhybrid::hybrid {

const char* to_string(Task v) { return v == Task::estimation ? "estimation" : "forecast"; }

const char* to_string(FeatureVariant v) {
  switch (v) {
    case FeatureVariant::abundance_plus_obs: return "abundance_plus_obs";
    case FeatureVariant::ssb_plus_obs: return "ssb_plus_obs";
    case FeatureVariant::ssb_only: return "ssb_only";
  }
  return "?";
}

const char* to_string(LabelPolicy v) {
  return v == LabelPolicy::final_model ? "final_model" : "strict_past";
}

const char* to_string(Correction v) {
  switch (v) {
    case Correction::direct: return "direct";
    case Correction::residual: return "residual";
    case Correction::log_ratio: return "log_ratio";
  }
  return "?";
}

Task task_from_string(const std::string& s) {
  if (s == "estimation") return Task::estimation;
  if (s == "forecast") return Task::forecast;
  fail(ErrorCode::parse, "unknown task '" + s + "' (expected estimation or forecast)");
}

FeatureVariant feature_variant_from_string(const std::string& s) {
  if (s == "abundance_plus_obs") return FeatureVariant::abundance_plus_obs;
  if (s == "ssb_plus_obs") return FeatureVariant::ssb_plus_obs;
  if (s == "ssb_only") return FeatureVariant::ssb_only;
  fail(ErrorCode::parse, "unknown feature variant '" + s + "'");
}

LabelPolicy label_policy_from_string(const std::string& s) {
  if (s == "final_model") return LabelPolicy::final_model;
  if (s == "strict_past") return LabelPolicy::strict_past;
  fail(ErrorCode::parse, "unknown label policy '" + s + "' (expected final_model or strict_past)");
}

Correction correction_from_string(const std::string& s) {
  if (s == "direct") return Correction::direct;
  if (s == "residual") return Correction::residual;
  if (s == "log_ratio") return Correction::log_ratio;
  fail(ErrorCode::parse,
       "unknown correction '" + s + "' (expected direct, residual or log_ratio)");
}

void TaskSpec::validate() const {
  const bool ok = target == ParameterKind::recruitment
                      ? variant == FeatureVariant::abundance_plus_obs
                      : variant != FeatureVariant::abundance_plus_obs;
  if (!ok) {
    fail(ErrorCode::config, std::string("feature variant ") + to_string(variant) +
                                " is not used for target " + stockhybrid::to_string(target));
  }
}

std::string TaskSpec::id() const {
  std::ostringstream s;
  s << to_string(task) << '/' << stockhybrid::to_string(target) << '/' << to_string(variant) << '/'
    << to_string(label_policy) << '/' << to_string(correction);
  return s.str();
}

std::vector<FeatureVariant> variants_for(ParameterKind target) {
  if (target == ParameterKind::recruitment) return {FeatureVariant::abundance_plus_obs};
  return {FeatureVariant::ssb_plus_obs, FeatureVariant::ssb_only};
}

TrainingTuple make_tuple(const TaskSpec& spec, const assess::FittedAssessment& model,
                         const ObservationSeries& obs, const BiologySeries& bio, int i) {
  if (model.last_data_year != i) {
    fail(ErrorCode::invalid_argument, "tuple for year " + std::to_string(i) +
                                          " needs the assessment on data through that year");
  }
  const AbundanceVector n =
      spec.task == Task::estimation ? assess::estimate(model, i) : assess::forecast(model, 1);
  const double rec = recruitment_of(n);
  // Biology of the feature year: later biology is not known at year i.
  const double spawners = ssb(n.values, bio, i);

  TrainingTuple tuple;
  tuple.feature_year = i;
  tuple.target_year = n.year;
  tuple.baseline = spec.target == ParameterKind::recruitment ? rec : spawners;

  FeatureParts parts;
  if (spec.variant == FeatureVariant::abundance_plus_obs) {
    parts.abundance = n;
    parts.parameters.emplace_back("REC_hat", rec);
  } else {
    parts.parameters.emplace_back("SSB_hat", spawners);
  }
  if (spec.variant != FeatureVariant::ssb_only) {
    for (const auto& fleet : obs.fleets) parts.observations.push_back(slice_year(fleet, i));
  }
  tuple.features = flatten_features(parts);

  const std::size_t from_model =
      (parts.abundance ? parts.abundance->values.size() : 0) + parts.parameters.size();
  for (std::size_t f = 0; f < tuple.features.size(); ++f) {
    FeatureSource src;
    src.feature = tuple.features.names[f];
    if (f < from_model) {
      src.model_year = model.last_data_year;
      src.data_year = model.last_data_year;
    } else {
      src.data_year = i;
    }
    tuple.provenance.push_back(std::move(src));
  }
  return tuple;
}

StockParameterSeries make_labels(const ModelProvider& models, const BiologySeries& bio,
                                 ParameterKind target, int label_year) {
  const auto m = models(label_year);
  if (!m || !m->converged) {
    fail(ErrorCode::not_converged,
         "label assessment through " + std::to_string(label_year) + " did not converge");
  }
  StockParameterSeries labels{target, m->first_year, {}};
  for (int y = m->first_year; y <= label_year; ++y) {
    labels.values.push_back(assess::derive_parameter(assess::estimate(*m, y), bio, target));
  }
  return labels;
}

Dataset build_dataset(const TaskSpec& spec, const ModelProvider& models,
                      const ObservationSeries& obs, const BiologySeries& bio,
                      const StockParameterSeries& labels, int t, int min_years) {
  spec.validate();
  const int label_model_year = labels.last_year();
  auto usable = [&](int i) -> std::shared_ptr<const assess::FittedAssessment> {
    if (i - obs.first_year + 1 < min_years) return nullptr;
    auto m = models(i);
    return m && m->converged ? m : nullptr;
  };

  Dataset d;
  const auto test_model = usable(t);
  if (!test_model) {
    fail(ErrorCode::not_converged,
         "assessment through " + std::to_string(t) + " is unavailable or did not converge");
  }
  d.test = make_tuple(spec, *test_model, obs, bio, t);
  d.test.label = labels.has(d.test.target_year) ? labels.at(d.test.target_year) : kMissing;
  d.test.label_model_year = label_model_year;

  for (int i = obs.first_year; i < t; ++i) {
    if (i - obs.first_year + 1 < min_years) continue;
    const auto m = usable(i);
    const int target_year = spec.task == Task::estimation ? i : i + 1;
    if (!m || !labels.has(target_year) || is_missing(labels.at(target_year))) {
      d.dropped.push_back(i);
      continue;
    }
    auto tuple = make_tuple(spec, *m, obs, bio, i);
    tuple.label = labels.at(target_year);
    tuple.label_model_year = label_model_year;
    d.train.push_back(std::move(tuple));
  }
  if (d.train.size() < 5) {
    fail(ErrorCode::insufficient_data, "only " + std::to_string(d.train.size()) +
                                           " usable training tuples before year " +
                                           std::to_string(t) + " (need 5)");
  }
  return d;
}

std::vector<std::string> audit(const Dataset& d, LabelPolicy policy) {
  std::vector<std::string> violations;
  auto check = [&](const TrainingTuple& tuple, const char* role) {
    if (tuple.provenance.size() != tuple.features.size()) {
      violations.push_back(std::string(role) + " tuple " + std::to_string(tuple.feature_year) +
                           ": provenance does not cover every feature");
    }
    for (const auto& src : tuple.provenance) {
      if (src.data_year > tuple.feature_year || src.model_year > tuple.feature_year) {
        std::ostringstream s;
        s << role << " tuple " << tuple.feature_year << ": feature " << src.feature
          << " uses data through " << std::max(src.data_year, src.model_year);
        violations.push_back(s.str());
      }
    }
    if (policy == LabelPolicy::strict_past && tuple.label_model_year > d.test.feature_year &&
        role == std::string("training")) {
      std::ostringstream s;
      s << "training tuple " << tuple.feature_year << ": label from assessment through "
        << tuple.label_model_year << " after test year " << d.test.feature_year;
      violations.push_back(s.str());
    }
  };
  for (const auto& tuple : d.train) {
    check(tuple, "training");
    if (tuple.target_year > d.test.feature_year) {
      violations.push_back("training tuple " + std::to_string(tuple.feature_year) +
                           ": target year after the test feature year");
    }
  }
  check(d.test, "test");
  return violations;
}

}  // namespace stockhybrid::hybrid
