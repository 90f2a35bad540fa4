#pragma once

// Penalty families, their derivatives, coordinate-wise minimizers and the
// asymptotic rate sequences (a_n, b_n, c_n).

#include <span>
#include <string>
#include <vector>

namespace ppr {

enum class Family { ridge, lasso, enet, al, aenet, scad, mcplus };

Family parse_family(const std::string& name);
std::string family_name(Family f);
bool is_adaptive(Family f);
bool is_convex(Family f);
// 3.7 for scad, 3 for mcplus, 0.5 for enet/aenet; unused otherwise.
double default_gamma(Family f);

struct PenaltySpec {
  Family family = Family::lasso;
  double lambda = 0.0;
  double gamma = 0.0;
  // lambda_j per covariate (index 0 = first covariate); empty means lambda
  std::vector<double> per_coef_lambda;

  static PenaltySpec make(Family f, double lambda);
  static PenaltySpec make(Family f, double lambda, double gamma);

  double lambda_for(std::size_t j) const;
  // Throws ConfigError on a gamma outside the family's range or bad lambdas.
  void validate() const;
};

// Mixing parameter of the elastic-net form: 0 ridge, 1 lasso/al, gamma enet/aenet.
double enet_mix(Family f, double gamma);

double penalty_value(Family f, double lambda, double gamma, double theta);
double penalty_d1(Family f, double lambda, double gamma, double theta);
double penalty_d2(Family f, double lambda, double gamma, double theta);

double penalty_value(const PenaltySpec& spec, double theta, std::size_t j);
double penalty_d1(const PenaltySpec& spec, double theta, std::size_t j);
double penalty_d2(const PenaltySpec& spec, double theta, std::size_t j);

double soft_threshold(double z, double t);

// argmin_b  eta/2 b^2 - g b + p_lambda(|b|).
double cd_update(Family f, double g_tilde, double eta_tilde, double lambda, double gamma);

// lambda / max(|beta_j|, 1e-8).
std::vector<double> adaptive_lambdas(std::span<const double> beta_ridge, double lambda);

struct RateSequences {
  double a_n = 0.0;
  double b_n = 0.0;
  double c_n = 0.0;
};

// beta0 holds the true covariate coefficients (zeros mark the inactive set).
// a_n = max_{active} p'(|beta0_j|), c_n = max_{active} |p''(|beta0_j|)|,
// b_n = min_{inactive} inf_{0 < theta <= eps_n} p'(theta), eps_n = 1/sqrt(area).
// Non-adaptive families use the common lambda for b_n.
RateSequences theory_sequences(const PenaltySpec& spec, std::span<const double> beta0, double area);

}  // namespace ppr
