#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "timesynth/metrics_table.hpp"

namespace timesynth::stats {

// Random-intercept linear mixed model
//   y = X beta + Z u + e,  u ~ N(0, s2_u I) per group,  e ~ N(0, s2_e I),
// with X treatment-coded from Model x Occasion (full interaction) and one
// intercept per signal family.
struct LmmDesign {
  std::string metric;
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  std::vector<std::size_t> group;  // row -> index into group_levels
  std::vector<std::string> group_levels;
  std::vector<std::string> columns;  // "(Intercept)", "model[m]", "occasion[o]", "model[m]:occasion[o]"
  std::vector<std::string> model_levels;     // baseline first
  std::vector<std::string> occasion_levels;  // baseline first
  std::vector<std::string> unestimable;      // interaction columns dropped for lack of data

  std::size_t rows() const { return static_cast<std::size_t>(y.size()); }
  std::size_t column_index(std::string_view name) const;  // throws if absent
};

// Levels are ordered baseline first, then lexicographically, so the design
// does not depend on row order.
// A (model, occasion) combination with no rows has its interaction column
// dropped and listed in `unestimable`. Missing baselines raise ConfigError.
LmmDesign build_design(const std::vector<MetricsRow>& table, std::string_view metric,
                       std::string_view baseline_model = "linear", std::string_view baseline_occasion = "clean");

enum class Boundary { None, Lower, Upper };

struct LmmFit {
  std::vector<std::string> columns;
  Eigen::VectorXd beta;
  Eigen::VectorXd std_err;
  double sigma2_e = 0.0;
  double sigma2_u = 0.0;
  double lambda = 0.0;  // sigma2_u / sigma2_e
  double reml_loglik = 0.0;
  Boundary boundary = Boundary::None;
  std::size_t n_obs = 0;
  std::size_t n_groups = 0;
};

inline constexpr double kLambdaMin = 1e-8;
inline constexpr double kLambdaMax = 1e6;

// Profiled REML criterion at a fixed variance ratio.
double reml_criterion(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, std::span<const std::size_t> group,
                      double lambda);

// REML fit by log-scale golden-section search over [kLambdaMin, kLambdaMax]
// followed by a bisection on the analytic score. A maximum on the lower edge
// is reported as lambda = 0 (ordinary least squares) with Boundary::Lower.
LmmFit fit_reml(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, std::span<const std::size_t> group,
                std::vector<std::string> columns = {});
LmmFit fit_reml(const LmmDesign& design);

struct Contrast {
  std::string model;
  std::string metric;
  double coef = 0.0;
  double std_err = 0.0;
  double p_value = 1.0;
};

// Two-sided normal p-value for z.
double wald_p_value(double z);

// One row per non-baseline model: its main-effect coefficient, i.e. the
// difference to the baseline model at the baseline occasion.
std::vector<Contrast> contrasts(const LmmFit& fit, const LmmDesign& design);

std::string format_contrasts_csv(const std::vector<Contrast>& rows);
nlohmann::json fit_to_json(const LmmFit& fit, const LmmDesign& design);

}  // namespace timesynth::stats
