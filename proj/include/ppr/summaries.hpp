#pragma once

// Ripley's K with translation correction, the K(r) - pi r^2 surrogate for
// the integrated pair correlation, the optimal weight surfaces, and the
// sandwich covariance of penalized estimators.

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "ppr/geom.hpp"
#include "ppr/quadrature.hpp"

namespace ppr {

using RhoFn = std::function<double(Point)>;

// rho_at holds rho_hat at each point of the pattern.
double ripley_k(const PointPattern& pattern, std::span<const double> rho_at, double r);
double ripley_k(const PointPattern& pattern, const RhoFn& rho_hat, double r);

double f_hat(const PointPattern& pattern, std::span<const double> rho_at, double r);
double f_hat(const PointPattern& pattern, const RhoFn& rho_hat, double r);

// Shorter window side / 8.
double default_r(const Window& win);

enum class SurfaceSource { unit, poisson, logistic };

struct WeightSurface {
  std::vector<double> values;
  SurfaceSource source = SurfaceSource::unit;
};

WeightSurface unit_surface(std::size_t n);
// w = 1 / (1 + rho f), f floored at f_floor.
WeightSurface weight_surface_poisson(std::span<const double> rho_at, double f, double f_floor = 0.0);
// w = (rho + delta) / (delta (1 + rho f)), same floor.
WeightSurface weight_surface_logistic(std::span<const double> rho_at,
                                      std::span<const double> delta_at, double f,
                                      double f_floor = 0.0);

// (g - 1)(u, v)
using PairCorrelationFn = std::function<double(Point, Point)>;

struct SandwichVariance {
  std::vector<int> index;  // coefficient indices covered (0 = intercept)
  Eigen::MatrixXd A11, B11, C11, Pi, Sigma;
  std::vector<double> se;  // sqrt(Sigma_jj / |D|), aligned with index
};

// Index set {0} plus `support`. penalty_d2 gives p''_{lambda_j}(|beta_j|)
// on the coefficient scale of beta_hat, aligned with `support`.
// The integrals of A, B come from the scheme (quadrature weights for the
// Poisson kind, 1/delta over dummies for the logistic kind); C is a double
// sum over dummy locations only and vanishes without g_minus_1.
SandwichVariance sandwich_variance(const QuadratureScheme& scheme, std::span<const double> beta_hat,
                                   std::span<const int> support,
                                   std::span<const double> penalty_d2,
                                   const std::optional<PairCorrelationFn>& g_minus_1 = std::nullopt);

}  // namespace ppr
