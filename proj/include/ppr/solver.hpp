#pragma once

// Fitting log-linear intensities by (weighted) Poisson or logistic
// likelihoods, unpenalized or along a penalized lambda path.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ppr/geom.hpp"
#include "ppr/penalty.hpp"
#include "ppr/quadrature.hpp"
#include "ppr/rng.hpp"
#include "ppr/simulate.hpp"
#include "ppr/summaries.hpp"

namespace ppr {

enum class Method { pl, wpl, logit, wlogit };
Method parse_method(const std::string& name);
std::string method_name(Method m);

struct FitConfig {
  Method method = Method::pl;
  std::optional<PenaltySpec> penalty;
  int n_lambda = 100;
  double lambda_min_ratio = 1e-4;
  double cd_tol = 1e-7;
  int max_irls = 25;
  int max_cd = 10000;
  bool standardize = true;

  // pipeline options used by fit()
  int nd = 0;          // 0: default_nd
  double r = 0.0;      // 0: default_r(window)
  double delta = 0.0;  // 0: nd^2 / |D| for the logistic methods
  DummyKind dummy = DummyKind::stratified;
  RngSeed seed;        // dummy points of the logistic methods
  bool compute_se = true;
  std::optional<PairCorrelationFn> g_minus_1;

  void validate() const;
};

struct Diagnostics {
  int irls_iterations = 0;
  int cd_sweeps = 0;
  int nonconverged = 0;      // path points stopped by max_irls
  int inflated_updates = 0;  // non-convex updates with raised curvature
  bool clamped = false;      // linear predictor hit +-30
  double final_objective = 0.0;
  double lambda_max = 0.0;
  int nd = 0;
  double delta = 0.0;
  double r = 0.0;
  double f_hat = 0.0;
  std::size_t n_quadrature = 0;
  // internal design: z' = (z - center) / scale
  std::vector<double> center;
  std::vector<double> scale;
  std::vector<double> penalty_factor;
};

struct FitResult {
  std::vector<double> lambda_grid;
  Eigen::MatrixXd coef_path;  // n_lambda x (p + 1), original scale
  std::vector<double> wqbic;
  int selected_index = 0;
  std::vector<double> beta_hat;
  std::vector<int> support;  // j >= 1 with beta_hat_j != 0
  // length p + 1; NaN outside {0} and the support
  std::optional<std::vector<double>> se;
  Diagnostics diagnostics;
  // selected coefficients on the internal (standardized) scale
  std::vector<double> beta_internal;
};

// --- likelihood pieces -----------------------------------------------------

// (nu, y*) for a Poisson-kind scheme. Clamps the linear predictor to
// [-30, 30] and reports it through `clamped`.
struct Working {
  std::vector<double> nu;
  std::vector<double> ystar;
  bool clamped = false;
};
Working irls_working(const QuadratureScheme& scheme, std::span<const double> beta);

// Weighted log-likelihood of the scheme's kind (surface weights in scheme.w).
double log_likelihood(const QuadratureScheme& scheme, std::span<const double> beta);
// d loglik / d beta.
Eigen::VectorXd score(const QuadratureScheme& scheme, std::span<const double> beta);

struct Standardization {
  std::vector<double> center;  // per covariate
  std::vector<double> scale;
};
// Centers and scales from the intercept-only fit so that every internal
// covariate has unit curvature at the null model.
Standardization compute_standardization(const QuadratureScheme& scheme);
QuadratureScheme apply_standardization(const QuadratureScheme& scheme, const Standardization& st);
std::vector<double> to_internal(std::span<const double> beta, const Standardization& st);
std::vector<double> to_original(std::span<const double> beta, const Standardization& st);

// Intercept-only maximum likelihood.
double null_intercept(const QuadratureScheme& scheme);

// --- fitting ---------------------------------------------------------------

FitResult fit_unpenalized(const QuadratureScheme& scheme, const FitConfig& config);

// Decreasing log-spaced grid from lambda_max. Penalty factors come from
// penalty.per_coef_lambda / penalty.lambda when given, else 1.
std::vector<double> lambda_grid(const QuadratureScheme& scheme, const PenaltySpec& penalty,
                                const FitConfig& config);

// For al/aenet without per_coef_lambda a ridge pilot path (WQBIC-selected)
// supplies lambda_j = lambda / |beta_ridge_j| on the internal scale.
FitResult fit_path(const QuadratureScheme& scheme, const PenaltySpec& penalty,
                   const FitConfig& config);

// -2 loglik + s log|D|
double wqbic_value(double loglik, int s, double area);

// End to end: scheme construction, two-stage weights for wpl/wlogit,
// penalized path or unpenalized fit, sandwich standard errors.
FitResult fit(const PointPattern& pattern, const CovariateList& covariates, const FitConfig& config);

// Builds the scheme fit() would use, weights included.
QuadratureScheme build_scheme(const PointPattern& pattern, const CovariateList& covariates,
                              const FitConfig& config, Diagnostics* diag = nullptr);

}  // namespace ppr
