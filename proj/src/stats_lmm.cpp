#include "timesynth/stats_lmm.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <set>

#include "timesynth/error.hpp"
#include "timesynth/io.hpp"

namespace timesynth::stats {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

std::size_t LmmDesign::column_index(std::string_view name) const {
  const auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw InvalidInput("design has no column '" + std::string(name) + "'");
  return static_cast<std::size_t>(it - columns.begin());
}

namespace {

std::vector<std::string> levels(const std::vector<MetricsRow>& table, std::string MetricsRow::*field,
                                std::string_view baseline, const char* what) {
  std::vector<std::string> out{std::string(baseline)};
  bool found = false;
  for (const auto& r : table) {
    const auto& v = r.*field;
    if (v == baseline) found = true;
    if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
  }
  if (!found) throw ConfigError(std::string("baseline ") + what + " '" + std::string(baseline) + "' not in the table");
  std::sort(out.begin() + 1, out.end());
  return out;
}

std::size_t index_of(const std::vector<std::string>& v, const std::string& x) {
  return static_cast<std::size_t>(std::find(v.begin(), v.end(), x) - v.begin());
}

}  // namespace

LmmDesign build_design(const std::vector<MetricsRow>& table, std::string_view metric,
                       std::string_view baseline_model, std::string_view baseline_occasion) {
  if (table.empty()) throw InvalidInput("build_design: empty table");
  LmmDesign d;
  d.metric = canonical_metric(metric);
  d.model_levels = levels(table, &MetricsRow::model, baseline_model, "model");
  d.occasion_levels = levels(table, &MetricsRow::occasion, baseline_occasion, "occasion");
  for (const auto& r : table) {
    if (std::find(d.group_levels.begin(), d.group_levels.end(), r.family) == d.group_levels.end()) {
      d.group_levels.push_back(r.family);
    }
  }
  std::sort(d.group_levels.begin(), d.group_levels.end());

  std::set<std::pair<std::size_t, std::size_t>> present;
  for (const auto& r : table) present.insert({index_of(d.model_levels, r.model), index_of(d.occasion_levels, r.occasion)});

  // Column map: (model level, occasion level) -> column; 0 marks "none".
  d.columns.push_back("(Intercept)");
  std::vector<std::size_t> model_col(d.model_levels.size(), 0), occ_col(d.occasion_levels.size(), 0);
  for (std::size_t m = 1; m < d.model_levels.size(); ++m) {
    model_col[m] = d.columns.size();
    d.columns.push_back("model[" + d.model_levels[m] + "]");
  }
  for (std::size_t o = 1; o < d.occasion_levels.size(); ++o) {
    occ_col[o] = d.columns.size();
    d.columns.push_back("occasion[" + d.occasion_levels[o] + "]");
  }
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> inter_col;
  for (std::size_t m = 1; m < d.model_levels.size(); ++m) {
    for (std::size_t o = 1; o < d.occasion_levels.size(); ++o) {
      const std::string name = "model[" + d.model_levels[m] + "]:occasion[" + d.occasion_levels[o] + "]";
      if (!present.count({m, o})) {
        d.unestimable.push_back(name);
        continue;
      }
      inter_col[{m, o}] = d.columns.size();
      d.columns.push_back(name);
    }
  }

  const auto n = static_cast<Index>(table.size());
  d.x = MatrixXd::Zero(n, static_cast<Index>(d.columns.size()));
  d.y.resize(n);
  d.group.resize(table.size());
  for (Index i = 0; i < n; ++i) {
    const auto& r = table[static_cast<std::size_t>(i)];
    const auto m = index_of(d.model_levels, r.model), o = index_of(d.occasion_levels, r.occasion);
    d.x(i, 0) = 1.0;
    if (m > 0) d.x(i, static_cast<Index>(model_col[m])) = 1.0;
    if (o > 0) d.x(i, static_cast<Index>(occ_col[o])) = 1.0;
    if (m > 0 && o > 0) d.x(i, static_cast<Index>(inter_col.at({m, o}))) = 1.0;
    d.y(i) = metric_value(r, d.metric);
    if (!std::isfinite(d.y(i))) throw InvalidInput("build_design: non-finite " + d.metric + " for " + r.series_id);
    d.group[static_cast<std::size_t>(i)] = index_of(d.group_levels, r.family);
  }

  Eigen::ColPivHouseholderQR<MatrixXd> qr(d.x);
  if (qr.rank() < d.x.cols()) {
    throw ConfigError("build_design: design matrix has rank " + std::to_string(qr.rank()) + " < " +
                      std::to_string(d.x.cols()) + " columns");
  }
  return d;
}

// ---------------------------------------------------------------------------
// REML

namespace {

// Sufficient statistics; every lambda evaluation is O(p^3 + G p^2).
struct Moments {
  MatrixXd xtx;
  VectorXd xty;
  double yty = 0.0;
  std::vector<VectorXd> s;  // per-group column sums of X
  std::vector<double> t;    // per-group sums of y
  std::vector<double> n;    // group sizes
  std::size_t rows = 0;
  std::size_t p = 0;
};

Moments moments(const MatrixXd& x, const VectorXd& y, std::span<const std::size_t> group) {
  if (static_cast<std::size_t>(x.rows()) != group.size() || x.rows() != y.size()) {
    throw InvalidInput("lmm: X, y and group sizes differ");
  }
  Moments m;
  m.rows = group.size();
  m.p = static_cast<std::size_t>(x.cols());
  m.xtx = x.transpose() * x;
  m.xty = x.transpose() * y;
  m.yty = y.squaredNorm();
  const std::size_t g = group.empty() ? 0 : *std::max_element(group.begin(), group.end()) + 1;
  m.s.assign(g, VectorXd::Zero(x.cols()));
  m.t.assign(g, 0.0);
  m.n.assign(g, 0.0);
  for (std::size_t i = 0; i < group.size(); ++i) {
    m.s[group[i]] += x.row(static_cast<Index>(i)).transpose();
    m.t[group[i]] += y(static_cast<Index>(i));
    m.n[group[i]] += 1.0;
  }
  return m;
}

struct Gls {
  VectorXd beta;
  MatrixXd a_inv;  // (X' V^-1 X)^-1 in units of sigma2_e
  double rss = 0.0;  // r' V^-1 r
  double log_det_v = 0.0;
  double log_det_a = 0.0;
  double reml = 0.0;
  double score = 0.0;  // d reml / d log lambda
};

Gls solve(const Moments& m, double lambda) {
  MatrixXd a = m.xtx;
  VectorXd b = m.xty;
  double yvy = m.yty;
  Gls out;
  for (std::size_t g = 0; g < m.n.size(); ++g) {
    const double c = lambda / (1.0 + lambda * m.n[g]);
    a.noalias() -= c * m.s[g] * m.s[g].transpose();
    b -= c * m.t[g] * m.s[g];
    yvy -= c * m.t[g] * m.t[g];
    out.log_det_v += std::log1p(lambda * m.n[g]);
  }
  Eigen::LLT<MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) throw InvalidInput("lmm: X'V^-1X is not positive definite");
  out.beta = llt.solve(b);
  out.a_inv = llt.solve(MatrixXd::Identity(a.rows(), a.cols()));
  out.rss = std::max(yvy - out.beta.dot(b), 0.0);
  const MatrixXd l = llt.matrixL();
  out.log_det_a = 2.0 * l.diagonal().array().log().sum();

  const double dof = static_cast<double>(m.rows - m.p);
  const double sigma2 = out.rss / dof;
  out.reml = -0.5 * (dof * (std::log(2.0 * std::numbers::pi * sigma2) + 1.0) + out.log_det_v + out.log_det_a);

  // Analytic score. Group sums of V^-1 r are R_g / (1 + lambda n_g), where
  // R_g is the group's residual sum; X_g' V_g^-1 1 = s_g / (1 + lambda n_g).
  double quad = 0.0, trace_v = 0.0, trace_a = 0.0;
  for (std::size_t g = 0; g < m.n.size(); ++g) {
    const double k = 1.0 / (1.0 + lambda * m.n[g]);
    const double r_g = m.t[g] - m.s[g].dot(out.beta);
    quad += (r_g * k) * (r_g * k);
    trace_v += m.n[g] * k;
    const VectorXd w = k * m.s[g];
    trace_a += w.dot(out.a_inv * w);
  }
  const double d_lambda = -0.5 * (-dof * quad / std::max(out.rss, 1e-300) + trace_v - trace_a);
  out.score = lambda * d_lambda;
  return out;
}

}  // namespace

double reml_criterion(const MatrixXd& x, const VectorXd& y, std::span<const std::size_t> group, double lambda) {
  return solve(moments(x, y, group), lambda).reml;
}

LmmFit fit_reml(const MatrixXd& x, const VectorXd& y, std::span<const std::size_t> group,
                std::vector<std::string> columns) {
  const Moments m = moments(x, y, group);
  if (m.rows < m.p + m.n.size()) {
    throw InvalidInput("lmm: need at least columns + groups rows (" + std::to_string(m.p + m.n.size()) + "), got " +
                       std::to_string(m.rows));
  }
  const auto f = [&](double t) { return solve(m, std::exp(t)).reml; };
  const double lo = std::log(kLambdaMin), hi = std::log(kLambdaMax);

  // Coarse scan picks the bracket, golden section narrows it.
  constexpr int kScan = 64;
  int best = 0;
  double best_val = -INFINITY;
  for (int i = 0; i <= kScan; ++i) {
    const double v = f(lo + (hi - lo) * i / kScan);
    if (v > best_val) {
      best_val = v;
      best = i;
    }
  }
  double a = lo + (hi - lo) * std::max(best - 1, 0) / kScan;
  double b = lo + (hi - lo) * std::min(best + 1, kScan) / kScan;
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > 1e-8) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  double t = 0.5 * (a + b);

  // Polish on the score: find its sign change near t by bisection.
  const auto score = [&](double u) { return solve(m, std::exp(u)).score; };
  double s_lo = std::max(lo, t - 0.05), s_hi = std::min(hi, t + 0.05);
  if (score(s_lo) > 0.0 && score(s_hi) < 0.0) {
    for (int i = 0; i < 200 && s_hi - s_lo > 1e-15 * std::max(1.0, std::abs(t)); ++i) {
      const double mid = 0.5 * (s_lo + s_hi);
      (score(mid) > 0.0 ? s_lo : s_hi) = mid;
    }
    t = 0.5 * (s_lo + s_hi);
  }

  LmmFit fit;
  fit.n_obs = m.rows;
  fit.n_groups = m.n.size();
  double lambda = std::exp(t);
  if (t - lo < 1e-6 && score(lo) <= 0.0) {
    fit.boundary = Boundary::Lower;
    lambda = 0.0;
  } else if (hi - t < 1e-6 && score(hi) >= 0.0) {
    fit.boundary = Boundary::Upper;
    lambda = kLambdaMax;
  }
  const Gls g = solve(m, lambda);
  fit.lambda = lambda;
  fit.beta = g.beta;
  fit.sigma2_e = g.rss / static_cast<double>(m.rows - m.p);
  fit.sigma2_u = lambda * fit.sigma2_e;
  fit.std_err = (fit.sigma2_e * g.a_inv.diagonal().array()).sqrt();
  fit.reml_loglik = g.reml;
  if (columns.empty()) {
    for (std::size_t j = 0; j < m.p; ++j) columns.push_back("x" + std::to_string(j));
  }
  fit.columns = std::move(columns);
  return fit;
}

LmmFit fit_reml(const LmmDesign& design) { return fit_reml(design.x, design.y, design.group, design.columns); }

double wald_p_value(double z) { return std::erfc(std::abs(z) / std::numbers::sqrt2); }

std::vector<Contrast> contrasts(const LmmFit& fit, const LmmDesign& design) {
  std::vector<Contrast> out;
  for (std::size_t m = 1; m < design.model_levels.size(); ++m) {
    const auto j = static_cast<Index>(design.column_index("model[" + design.model_levels[m] + "]"));
    Contrast c;
    c.model = design.model_levels[m];
    c.metric = design.metric;
    c.coef = fit.beta(j);
    c.std_err = fit.std_err(j);
    c.p_value = c.std_err > 0.0 ? wald_p_value(c.coef / c.std_err) : (c.coef == 0.0 ? 1.0 : 0.0);
    out.push_back(c);
  }
  return out;
}

std::string format_contrasts_csv(const std::vector<Contrast>& rows) {
  std::string out = "model,metric,coef,std_err,p_value\n";
  for (const auto& r : rows) {
    out += r.model + "," + r.metric + "," + io::format_double(r.coef) + "," + io::format_double(r.std_err) + "," +
           io::format_double(r.p_value) + "\n";
  }
  return out;
}

nlohmann::json fit_to_json(const LmmFit& fit, const LmmDesign& design) {
  nlohmann::json coefs = nlohmann::json::array();
  for (std::size_t j = 0; j < fit.columns.size(); ++j) {
    const auto i = static_cast<Index>(j);
    const double z = fit.beta(i) / fit.std_err(i);
    coefs.push_back({{"term", fit.columns[j]},
                     {"coef", fit.beta(i)},
                     {"std_err", fit.std_err(i)},
                     {"p_value", wald_p_value(z)}});
  }
  const char* boundary = fit.boundary == Boundary::None ? "none" : fit.boundary == Boundary::Lower ? "lower" : "upper";
  return {{"metric", design.metric},
          {"n_obs", fit.n_obs},
          {"groups", design.group_levels},
          {"baseline_model", design.model_levels.front()},
          {"baseline_occasion", design.occasion_levels.front()},
          {"sigma2_e", fit.sigma2_e},
          {"sigma2_u", fit.sigma2_u},
          {"lambda", fit.lambda},
          {"reml_loglik", fit.reml_loglik},
          {"boundary", boundary},
          {"unestimable", design.unestimable},
          {"coefficients", coefs}};
}

}  // namespace timesynth::stats
