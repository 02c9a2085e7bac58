#include "state_space.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace stockhybrid::assess::detail {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLog2Pi = 1.8378770664093453;

// q blocks: the youngest age, the next age, and everything older.
int q_block(int age_index) { return std::min(age_index, 2); }

const char* block_name(int block) {
  switch (block) {
    case 0: return "first";
    case 1: return "second";
    default: return "rest";
  }
}

// log of F/Z * (1 - exp(-Z)) and its derivative with respect to log F.
void log_catch_fraction(double f, double z, double& value, double& dlogf) {
  const double one_minus = -std::expm1(-z);
  value = std::log(f) - std::log(z) + std::log(one_minus);
  dlogf = 1.0 - f / z + f * std::exp(-z) / one_minus;
}

}  // namespace

StateSpaceModel::StateSpaceModel(const ObservationSeries& obs, const BiologySeries& bio,
                                 const AssessorConfig& cfg)
    : cfg_(cfg) {
  cfg_.validate();
  obs.validate();
  if (!(bio.ages() == cfg.ages)) {
    fail(ErrorCode::invalid_argument, "biology age range differs from the assessor config");
  }
  ages_ = cfg.ages.size();
  first_year_ = obs.first_year;
  last_year_ = obs.last_year;
  if (!bio.has_year(first_year_) || !bio.has_year(last_year_)) {
    fail(ErrorCode::missing_data, "biology does not cover the observation years");
  }
  const int years = last_year_ - first_year_ + 1;
  for (int y = first_year_; y <= last_year_; ++y) {
    for (double v : bio.natural_mortality(y)) mortality_.push_back(v);
    for (double v : bio.weight(y)) weight_.push_back(v);
    for (double v : bio.maturity(y)) maturity_.push_back(v);
  }

  // Age-structured fleets in name order; aggregate indices are not modelled.
  std::vector<const FleetObservation*> sorted;
  for (const auto& f : obs.fleets) {
    if (!f.aggregate()) sorted.push_back(&f);
  }
  std::sort(sorted.begin(), sorted.end(),
            [](const FleetObservation* a, const FleetObservation* b) { return a->name < b->name; });
  cells_.assign(static_cast<std::size_t>(years), {});
  bool has_survey = false;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const auto& f = *sorted[i];
    FleetInfo info;
    info.name = f.name;
    info.kind = f.kind;
    info.timing = f.kind == FleetKind::survey ? f.timing : 0.0;
    info.q_index.assign(static_cast<std::size_t>(ages_), -1);
    has_survey = has_survey || f.kind == FleetKind::survey;
    for (int age : f.ages) {
      if (!cfg.ages.contains(age)) {
        fail(ErrorCode::invalid_argument,
             "fleet '" + f.name + "' observes age " + std::to_string(age) + " outside the model");
      }
    }
    for (int y = std::max(f.first_year, first_year_); y <= std::min(f.last_year(), last_year_);
         ++y) {
      const auto& row = f.values[static_cast<std::size_t>(y - f.first_year)];
      for (std::size_t c = 0; c < f.ages.size(); ++c) {
        if (is_missing(row[c])) continue;
        cells_[static_cast<std::size_t>(y - first_year_)].push_back(
            ObsCell{static_cast<int>(i), cfg.ages.index(f.ages[c]), std::log(row[c])});
      }
    }
    fleets_.push_back(std::move(info));
  }
  if (!has_survey) fail(ErrorCode::invalid_argument, "assessment needs an age-structured survey");
  if (years < cfg.min_years) {
    fail(ErrorCode::insufficient_data, "assessment needs at least " +
                                           std::to_string(cfg.min_years) + " years of data");
  }
  build_layout();
}

std::span<const double> StateSpaceModel::mortality(int year) const {
  return std::span<const double>(mortality_).subspan(
      static_cast<std::size_t>((year - first_year_) * ages_), static_cast<std::size_t>(ages_));
}
std::span<const double> StateSpaceModel::weight(int year) const {
  return std::span<const double>(weight_).subspan(
      static_cast<std::size_t>((year - first_year_) * ages_), static_cast<std::size_t>(ages_));
}
std::span<const double> StateSpaceModel::maturity(int year) const {
  return std::span<const double>(maturity_).subspan(
      static_cast<std::size_t>((year - first_year_) * ages_), static_cast<std::size_t>(ages_));
}

std::vector<double> StateSpaceModel::selectivity(double a50, double log_slope) const {
  const double slope = std::exp(log_slope);
  std::vector<double> s(static_cast<std::size_t>(ages_));
  for (int a = 0; a < ages_; ++a) {
    const double age = cfg_.ages.min_age + a;
    s[a] = 1.0 / (1.0 + std::exp(-slope * (age - a50)));
  }
  return s;
}

Eigen::VectorXd StateSpaceModel::initial_mean(std::span<const double> sel) const {
  // First year with catch-at-age.
  int year_index = -1;
  std::vector<double> log_catch(static_cast<std::size_t>(ages_), kMissing);
  for (std::size_t y = 0; y < cells_.size() && year_index < 0; ++y) {
    for (const auto& c : cells_[y]) {
      if (fleets_[c.fleet].kind != FleetKind::commercial_catch) continue;
      log_catch[c.age] = c.log_value;
      year_index = static_cast<int>(y);
    }
  }
  const auto m = mortality(first_year_ + std::max(year_index, 0));

  // Equilibrium log abundance relative to recruitment, and the implied
  // log catch, at fishing intensity exp(u).
  std::vector<double> rel(static_cast<std::size_t>(ages_));
  auto structure = [&](double u) {
    const double f = std::exp(u);
    double acc = 0.0;
    for (int a = 0; a < ages_; ++a) {
      rel[a] = acc;
      acc -= sel[a] * f + m[a];
    }
    if (cfg_.ages.plus_group) {
      const int last = ages_ - 1;
      rel[last] -= std::log(-std::expm1(-(sel[last] * f + m[last])));
    }
  };
  auto misfit = [&](double u, double* log_r) {
    structure(u);
    const double f = std::exp(u);
    double sum = 0.0;
    int count = 0;
    std::vector<double> pred(static_cast<std::size_t>(ages_));
    for (int a = 0; a < ages_; ++a) {
      if (is_missing(log_catch[a])) continue;
      double lc, unused;
      const double fa = std::max(sel[a] * f, 1e-12);
      log_catch_fraction(fa, fa + m[a], lc, unused);
      pred[a] = rel[a] + lc;
      sum += log_catch[a] - pred[a];
      ++count;
    }
    if (count == 0) {
      if (log_r) *log_r = 0.0;
      return 0.0;
    }
    const double lr = sum / count;
    double ss = 0.0;
    for (int a = 0; a < ages_; ++a) {
      if (is_missing(log_catch[a])) continue;
      const double d = log_catch[a] - pred[a] - lr;
      ss += d * d;
    }
    if (log_r) *log_r = lr;
    return ss;
  };

  const double lo = std::log(1e-3);
  const double hi = std::log(5.0);
  constexpr int kGrid = 40;
  int best = 0;
  double best_val = kInf;
  for (int i = 0; i <= kGrid; ++i) {
    const double u = lo + (hi - lo) * i / kGrid;
    const double v = misfit(u, nullptr);
    if (v < best_val) {
      best_val = v;
      best = i;
    }
  }
  double a = lo + (hi - lo) * std::max(best - 1, 0) / kGrid;
  double b = lo + (hi - lo) * std::min(best + 1, kGrid) / kGrid;
  const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - ratio * (b - a);
  double d = a + ratio * (b - a);
  double fc = misfit(c, nullptr);
  double fd = misfit(d, nullptr);
  while (b - a > 1e-10) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - ratio * (b - a);
      fc = misfit(c, nullptr);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + ratio * (b - a);
      fd = misfit(d, nullptr);
    }
  }
  const double u = 0.5 * (a + b);
  double log_r = 0.0;
  misfit(u, &log_r);
  structure(u);
  Eigen::VectorXd mean(ages_ + 1);
  for (int i = 0; i < ages_; ++i) mean[i] = log_r + rel[i];
  mean[ages_] = u;
  return mean;
}

void StateSpaceModel::build_layout() {
  const double sigma_lo = std::log(5e-4);
  const double sigma_hi = std::log(4.0);
  layout_.push_back({"log_sigma_rec", sigma_lo, sigma_hi, std::log(0.5), 0.5});
  layout_.push_back({"log_sigma_proc", sigma_lo, sigma_hi, std::log(0.1), 0.5});
  layout_.push_back({"log_sigma_f", sigma_lo, sigma_hi, std::log(0.1), 0.5});
  sigma_obs_begin_ = static_cast<int>(layout_.size());
  for (auto& f : fleets_) {
    f.sigma_index = static_cast<int>(layout_.size());
    layout_.push_back({"log_sigma_obs[" + f.name + "]", sigma_lo, sigma_hi, std::log(0.3), 0.5});
  }

  // Default selectivity and the implied first-year state give a scale for
  // the catchability starts.
  const double a50_start = cfg_.ages.min_age + 1.5;
  const double slope_start = std::log(1.5);
  const auto sel0 = selectivity(a50_start, slope_start);
  const Eigen::VectorXd prior = initial_mean(sel0);
  const double f0 = std::exp(prior[ages_]);
  const auto m0 = mortality(first_year_);

  q_begin_ = static_cast<int>(layout_.size());
  for (std::size_t fi = 0; fi < fleets_.size(); ++fi) {
    auto& f = fleets_[fi];
    if (f.kind != FleetKind::survey) continue;
    for (int block = 0; block < 3; ++block) {
      double sum = 0.0;
      int count = 0;
      bool covered = false;
      const int years_used = std::min<int>(5, static_cast<int>(cells_.size()));
      for (int y = 0; y < static_cast<int>(cells_.size()); ++y) {
        for (const auto& c : cells_[y]) {
          if (c.fleet != static_cast<int>(fi) || q_block(c.age) != block) continue;
          covered = true;
          if (y >= years_used) continue;
          const double z = sel0[c.age] * f0 + m0[c.age];
          sum += c.log_value - prior[c.age] + f.timing * z;
          ++count;
        }
      }
      if (!covered) continue;
      const double start = count > 0 ? sum / count : 0.0;
      const int index = static_cast<int>(layout_.size());
      layout_.push_back({"log_q[" + f.name + "," + block_name(block) + "]", start - 10.0,
                         start + 10.0, start, 0.5});
      for (int a = 0; a < ages_; ++a) {
        if (q_block(a) == block) f.q_index[a] = index;
      }
    }
  }
  sel_begin_ = static_cast<int>(layout_.size());
  layout_.push_back({"sel_a50", cfg_.ages.min_age - 1.0, static_cast<double>(cfg_.ages.max_age),
                     a50_start, 0.5});
  layout_.push_back({"log_sel_slope", std::log(0.2), std::log(8.0), slope_start, 0.3});
  if (cfg_.recruitment == RecruitmentModel::beverton_holt) {
    bh_begin_ = static_cast<int>(layout_.size());
    const double log_r = prior[0];
    double s = 0.0;
    const auto w = weight(first_year_);
    const auto mat = maturity(first_year_);
    for (int a = 0; a < ages_; ++a) s += w[a] * mat[a] * std::exp(prior[a]);
    const double log_s = std::log(std::max(s, 1e-12));
    // alpha * S / (1 + beta * S) reproduces R when alpha = 2R/S, beta = 1/S.
    const double la = std::log(2.0) + log_r - log_s;
    const double lb = -log_s;
    layout_.push_back({"log_bh_alpha", la - 10.0, la + 10.0, la, 0.5});
    layout_.push_back({"log_bh_beta", lb - 12.0, lb + 12.0, lb, 0.5});
  }
}

Decoded StateSpaceModel::decode(std::span<const double> theta) const {
  if (theta.size() != layout_.size()) {
    fail(ErrorCode::invalid_argument, "parameter vector has " + std::to_string(theta.size()) +
                                          " entries, expected " +
                                          std::to_string(layout_.size()));
  }
  const double floor = cfg_.variance_floor;
  auto var = [floor](double log_sigma) { return std::max(std::exp(2.0 * log_sigma), floor); };
  Decoded d;
  d.var_rec = var(theta[0]);
  d.var_proc = var(theta[1]);
  d.var_f = var(theta[2]);
  for (const auto& f : fleets_) d.var_obs.push_back(var(theta[f.sigma_index]));
  d.log_q.assign(theta.begin(), theta.end());
  d.selectivity = selectivity(theta[sel_begin_], theta[sel_begin_ + 1]);
  if (bh_begin_ >= 0) {
    d.bh_alpha = std::exp(theta[bh_begin_]);
    d.bh_beta = std::exp(theta[bh_begin_ + 1]);
  }
  return d;
}

double StateSpaceModel::nll(std::span<const double> theta) const {
  return run(theta, false, false).nll;
}

FilterOutput StateSpaceModel::run(std::span<const double> theta, bool keep_states,
                                  bool smooth) const {
  FilterOutput out;
  const Decoded p = decode(theta);
  const int dim = ages_ + 1;
  const int fi = ages_;  // index of log f
  const int years = last_year_ - first_year_ + 1;
  const bool plus = cfg_.ages.plus_group;

  Eigen::VectorXd x = initial_mean(p.selectivity);
  Eigen::MatrixXd P = Eigen::MatrixXd::Identity(dim, dim) * cfg_.prior_variance;
  Eigen::MatrixXd G(dim, dim);
  Eigen::VectorXd xp(dim);
  Eigen::VectorXd pht(dim);
  std::vector<double> fa(static_cast<std::size_t>(ages_)), za(static_cast<std::size_t>(ages_));

  std::vector<Eigen::VectorXd> pred_mean;
  std::vector<Eigen::MatrixXd> pred_cov, jac;
  if (smooth) keep_states = true;

  double total = 0.0;
  auto broke = [&out]() {
    out.nll = kInf;
    return out;
  };

  for (int t = 0; t < years; ++t) {
    const int year = first_year_ + t;
    if (t > 0) {
      const auto m = mortality(year - 1);
      const double f = std::exp(x[fi]);
      for (int a = 0; a < ages_; ++a) {
        fa[a] = p.selectivity[a] * f;
        za[a] = fa[a] + m[a];
      }
      G.setZero();
      if (cfg_.recruitment == RecruitmentModel::random_walk) {
        xp[0] = x[0];
        G(0, 0) = 1.0;
      } else {
        const auto w = weight(year - 1);
        const auto mat = maturity(year - 1);
        double s = 0.0;
        for (int a = 0; a < ages_; ++a) s += w[a] * mat[a] * std::exp(x[a]);
        if (!(s > 0.0) || !std::isfinite(s)) return broke();
        xp[0] = std::log(p.bh_alpha) + std::log(s) - std::log1p(p.bh_beta * s);
        const double scale = 1.0 / (s * (1.0 + p.bh_beta * s));
        for (int a = 0; a < ages_; ++a) G(0, a) = w[a] * mat[a] * std::exp(x[a]) * scale;
      }
      for (int a = 0; a + 1 < ages_; ++a) {
        xp[a + 1] = x[a] - za[a];
        G(a + 1, a) = 1.0;
        G(a + 1, fi) = -fa[a];
      }
      if (plus) {
        const int last = ages_ - 1;
        const double u = x[last - 1] - za[last - 1];
        const double v = x[last] - za[last];
        const double mx = std::max(u, v);
        const double lse = mx + std::log(std::exp(u - mx) + std::exp(v - mx));
        const double pu = std::exp(u - lse);
        const double pv = std::exp(v - lse);
        xp[last] = lse;
        G(last, last - 1) = pu;
        G(last, last) = pv;
        G(last, fi) = -(pu * fa[last - 1] + pv * fa[last]);
      }
      xp[fi] = x[fi];
      G(fi, fi) = 1.0;

      Eigen::MatrixXd next = G * P * G.transpose();
      next(0, 0) += p.var_rec;
      for (int a = 1; a < ages_; ++a) next(a, a) += p.var_proc;
      next(fi, fi) += p.var_f;
      P = 0.5 * (next + next.transpose());
      x = xp;
    }
    if (keep_states) {
      pred_mean.push_back(x);
      pred_cov.push_back(P);
      jac.push_back(t > 0 ? G : Eigen::MatrixXd::Identity(dim, dim));
      out.filtered_trace_before_update.push_back(P.trace());
    }

    // Linearise every observation at the predicted state, then apply them as
    // a sequence of scalar updates (equal to the joint update).
    const Eigen::VectorXd lin = x;
    const auto m = mortality(year);
    const double f = std::exp(lin[fi]);
    for (const auto& c : cells_[static_cast<std::size_t>(t)]) {
      const auto& fleet = fleets_[c.fleet];
      const double fage = p.selectivity[c.age] * f;
      const double z = fage + m[c.age];
      double h, dh_df;
      if (fleet.kind == FleetKind::commercial_catch) {
        if (!(fage > 0.0)) return broke();
        double lc;
        log_catch_fraction(fage, z, lc, dh_df);
        h = lin[c.age] + lc;
      } else {
        h = p.log_q[fleet.q_index[c.age]] + lin[c.age] - fleet.timing * z;
        dh_df = -fleet.timing * fage;
      }
      const double innovation =
          c.log_value - h - (x[c.age] - lin[c.age]) - dh_df * (x[fi] - lin[fi]);
      for (int i = 0; i < dim; ++i) pht[i] = P(i, c.age) + dh_df * P(i, fi);
      const double s = pht[c.age] + dh_df * pht[fi] + p.var_obs[c.fleet];
      if (!(s > 0.0) || !std::isfinite(s)) return broke();
      const double inv = 1.0 / s;
      x += pht * (innovation * inv);
      for (int j = 0; j < dim; ++j) {
        const double pj = pht[j] * inv;
        for (int i = 0; i < dim; ++i) P(i, j) -= pht[i] * pj;
      }
      total += 0.5 * (kLog2Pi + std::log(s) + innovation * innovation * inv);
    }
    if (!std::isfinite(total) || !x.allFinite()) return broke();
    if (keep_states) {
      P = 0.5 * (P + P.transpose());
      out.filtered.push_back(StateEstimate{year, StateKind::filtered, x, P});
      out.filtered_trace_after_update.push_back(P.trace());
    }
  }
  out.nll = total;

  if (smooth) {
    out.smoothed.resize(out.filtered.size());
    out.smoothed.back() = out.filtered.back();
    out.smoothed.back().kind = StateKind::smoothed;
    for (int t = years - 2; t >= 0; --t) {
      const auto& filt = out.filtered[t];
      const Eigen::MatrixXd& pp = pred_cov[t + 1];
      const Eigen::MatrixXd& g = jac[t + 1];
      // J = P_f G' P_pred^{-1}
      const Eigen::MatrixXd gain = pp.ldlt().solve(g * filt.cov).transpose();
      const auto& later = out.smoothed[t + 1];
      StateEstimate s;
      s.year = filt.year;
      s.kind = StateKind::smoothed;
      s.mean = filt.mean + gain * (later.mean - pred_mean[t + 1]);
      Eigen::MatrixXd cov = filt.cov + gain * (later.cov - pp) * gain.transpose();
      s.cov = 0.5 * (cov + cov.transpose());
      if (!s.mean.allFinite()) {
        out.smoothed.clear();
        break;
      }
      out.smoothed[t] = std::move(s);
    }
  }
  return out;
}

}  // namespace stockhybrid::assess::detail
