#pragma once

// Seeded simulators: inhomogeneous Poisson and Thomas cluster processes,
// dummy point processes for the logistic scheme, and the synthetic covariate
// designs used by the replication study.

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ppr/geom.hpp"
#include "ppr/rng.hpp"

namespace ppr {

struct ThomasParams {
  double kappa = 0.0;  // parent intensity
  double omega = 0.0;  // sd of the Gaussian offspring displacement
  std::vector<double> beta;  // (beta_0, ..., beta_p)
};

using IntensityFn = std::function<double(Point)>;

// rho(u) = exp(beta_0 + sum_j beta_j z_j(u)) on a covariate list.
class LogLinearIntensity {
 public:
  // Keeps a pointer to `covariates`, which must outlive this object.
  LogLinearIntensity(const CovariateList& covariates, std::vector<double> beta);

  double operator()(Point u) const;
  double log_value(Point u) const;
  // Max of rho over every pixel that touches `win`.
  double upper_bound(const Window& win) const;
  // Pixel-sum integral of rho over `win`.
  double integral(const Window& win) const;

 private:
  const CovariateList* covariates_;
  std::vector<double> beta_;
  // sum_j beta_j z_j per pixel when every raster shares one grid
  std::vector<double> combined_;
};

// Thinning of a homogeneous Poisson(bound) process. Throws PreconditionError
// if a sampled location has intensity above `bound`.
PointPattern simulate_poisson(const IntensityFn& intensity, double bound, const Window& win,
                              const RngSeed& rng);

// Thomas process with intensity exp(beta' z(u)) on `win`. Parents are drawn
// on win dilated by 4 omega; offspring are thinned against the covariate
// intensity and clipped to `win`.
PointPattern simulate_thomas(const ThomasParams& params, const CovariateList& covariates,
                             const Window& win, const RngSeed& rng);

// Offspring density k(u - c) for N(0, omega^2 I_2).
double thomas_kernel(double dx, double dy, double omega);
// g(r) - 1 for the Thomas process.
double thomas_pcf_minus_one(double r, double kappa, double omega);

// beta_0 = log(target / sum_pixels a * exp(slopes' z)).
double calibrate_intercept(std::span<const double> slopes, const CovariateList& covariates,
                           const Window& win, double target_mean);

// Margin r such that the eroded window carries `target_mean` expected
// points under exp(beta' z). Bisection on the pixel-sum integral.
double erosion_for_mean(std::span<const double> beta, const CovariateList& covariates,
                        const Window& win, double target_mean);

// Deterministic stand-ins for the elevation and elevation-gradient images:
// a smooth synthetic terrain sampled at pixel centers, its finite-difference
// slope magnitude, both standardized.
CovariateList reference_terrain(int nx = 201, int ny = 101,
                                const Window& window = Window(0.0, 1000.0, 0.0, 500.0));

// Omega_ij = 0.7^|i-j| with Omega_12 = Omega_21 = 0.
Eigen::MatrixXd scenario_correlation(int p = 20);
// Upper-triangular V with V'V = omega. Throws DomainError if not PD.
Eigen::MatrixXd upper_cholesky(const Eigen::MatrixXd& omega);
// z(u) = V' x(u) pixelwise; all rasters must share one grid.
CovariateList mix_covariates(const CovariateList& x, const Eigen::MatrixXd& v);

// Scenario 1: aux[0..1] standardized plus 18 white-noise rasters.
// Scenario 2: the scenario-1 stack mixed by the upper Cholesky factor of
// scenario_correlation(20). Scenario 3: 15 supplied rasters standardized.
CovariateList gen_scenario_covariates(int scenario, const RngSeed& rng,
                                      const std::optional<CovariateList>& aux);

enum class DummyKind { poisson, binomial, stratified };
DummyKind parse_dummy_kind(const std::string& name);

// poisson: Poisson(nd^2) uniform points; binomial: exactly nd^2 uniform
// points; stratified: one uniform point per cell of an nd x nd grid.
PointPattern dummy_process(DummyKind kind, int nd, const Window& win, const RngSeed& rng);

}  // namespace ppr
