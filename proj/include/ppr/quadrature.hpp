#pragma once

// Discretized likelihoods: Berman-Turner quadrature for the (weighted)
// Poisson likelihood and the dummy-point design for the (weighted) logistic
// likelihood.

#include <cstddef>
#include <filesystem>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "ppr/geom.hpp"

namespace ppr {

enum class SchemeKind { poisson, logistic };

struct QuadratureScheme {
  SchemeKind kind = SchemeKind::poisson;
  Window window{0.0, 1.0, 0.0, 1.0};
  std::vector<Point> locations;     // data first, then dummies
  std::vector<unsigned char> is_data;
  // poisson: quadrature weight (area units); logistic: offset -log delta(u)
  std::vector<double> v;
  Eigen::MatrixXd Z;                // rows (1, z_1(u_i), ..., z_p(u_i))
  std::vector<double> w;            // surface weight, 1 unless reweighted
  std::size_t n_data = 0;

  std::size_t size() const { return locations.size(); }
  std::size_t p() const { return Z.cols() > 0 ? static_cast<std::size_t>(Z.cols()) - 1 : 0; }
  double area() const { return ppr::area(window); }
  // delta(u_i) for logistic rows
  double delta(std::size_t i) const;
};

// nd x nd grid of dummies at cell centers with counting weights a / n_cell.
QuadratureScheme build_berman_turner(const PointPattern& pattern, const CovariateList& covariates,
                                     int nd);

// max(10, ceil(sqrt(4 m))).
int default_nd(const PointPattern& pattern);
int default_nd(std::size_t m);

using DeltaFn = std::function<double(Point)>;

QuadratureScheme build_logistic_scheme(const PointPattern& pattern,
                                       const CovariateList& covariates,
                                       const PointPattern& dummies, const DeltaFn& delta);

// 4 m / |D|.
double default_delta(std::size_t m, double area);

// P(y = 1) = rho / (rho + delta), written through the offset form.
double logistic_success(double linear_predictor, double offset);

// Replaces the surface weights; values must be finite and > 0.
void set_weights(QuadratureScheme& scheme, std::vector<double> w);

// i,x,y,is_data,v_or_offset,w,z1..zp
void dump_csv(const std::filesystem::path& path, const QuadratureScheme& scheme);

}  // namespace ppr
