#include "ppr/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ppr/error.hpp"

namespace ppr {

namespace {

bool touches(const Window& a, const Window& b) {
  return std::min(a.x_max(), b.x_max()) >= std::max(a.x_min(), b.x_min()) &&
         std::min(a.y_max(), b.y_max()) >= std::max(a.y_min(), b.y_min());
}

bool shares_grid(const CovariateList& covs) {
  for (const auto& c : covs) {
    if (!c.same_grid(covs.front())) return false;
  }
  return true;
}

Point uniform_point(const Window& win, std::mt19937_64& eng) {
  double x = win.x_min() + uniform01(eng) * win.width();
  double y = win.y_min() + uniform01(eng) * win.height();
  return {x, y};
}

std::uint64_t poisson_count(double mean, std::mt19937_64& eng) {
  if (!(mean > 0.0)) return 0;
  std::poisson_distribution<std::uint64_t> dist(mean);
  return dist(eng);
}

}  // namespace

LogLinearIntensity::LogLinearIntensity(const CovariateList& covariates, std::vector<double> beta)
    : covariates_(&covariates), beta_(std::move(beta)) {
  if (beta_.size() != covariates.size() + 1) {
    throw ConfigError("beta has " + std::to_string(beta_.size()) + " entries, expected " +
                      std::to_string(covariates.size() + 1));
  }
  if (!covariates.empty() && shares_grid(covariates)) {
    combined_.assign(covariates.front().values().size(), 0.0);
    for (std::size_t j = 0; j < covariates.size(); ++j) {
      double b = beta_[j + 1];
      if (b == 0.0) continue;
      auto vals = covariates[j].values();
      for (std::size_t k = 0; k < vals.size(); ++k) combined_[k] += b * vals[k];
    }
  }
}

double LogLinearIntensity::log_value(Point u) const {
  if (covariates_->empty()) return beta_[0];
  if (!combined_.empty()) return beta_[0] + combined_[covariates_->front().pixel_index(u)];
  double eta = beta_[0];
  for (std::size_t j = 0; j < covariates_->size(); ++j) {
    if (beta_[j + 1] != 0.0) eta += beta_[j + 1] * lookup((*covariates_)[j], u);
  }
  return eta;
}

double LogLinearIntensity::operator()(Point u) const { return std::exp(log_value(u)); }

double LogLinearIntensity::upper_bound(const Window& win) const {
  if (covariates_->empty()) return std::exp(beta_[0]);
  if (combined_.empty()) throw ConfigError("intensity bound needs rasters on one grid");
  const auto& ref = covariates_->front();
  double best = -std::numeric_limits<double>::infinity();
  for (int iy = 0; iy < ref.ny(); ++iy) {
    for (int ix = 0; ix < ref.nx(); ++ix) {
      if (!touches(ref.pixel(ix, iy), win)) continue;
      best = std::max(best, combined_[static_cast<std::size_t>(iy) * ref.nx() + ix]);
    }
  }
  if (!std::isfinite(best)) throw DomainError("window does not meet the covariate rasters");
  return std::exp(beta_[0] + best);
}

double LogLinearIntensity::integral(const Window& win) const {
  std::span<const double> slopes(beta_.data() + 1, beta_.size() - 1);
  return pixel_integral(*covariates_, win, [&](std::span<const double> z) {
    double eta = beta_[0];
    for (std::size_t j = 0; j < z.size(); ++j) eta += slopes[j] * z[j];
    return std::exp(eta);
  });
}

PointPattern simulate_poisson(const IntensityFn& intensity, double bound, const Window& win,
                              const RngSeed& rng) {
  if (!(bound >= 0.0) || !std::isfinite(bound)) {
    throw PreconditionError("intensity bound must be finite and nonnegative");
  }
  auto eng = rng.engine();
  std::uint64_t n = poisson_count(bound * area(win), eng);
  std::vector<Point> pts;
  pts.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    Point u = uniform_point(win, eng);
    double rho = intensity(u);
    if (rho > bound * (1.0 + 1e-12)) {
      throw PreconditionError("intensity exceeds the thinning bound at a sampled location");
    }
    if (uniform01(eng) * bound < rho) pts.push_back(u);
  }
  return PointPattern(win, std::move(pts));
}

double thomas_kernel(double dx, double dy, double omega) {
  double s2 = omega * omega;
  return std::exp(-(dx * dx + dy * dy) / (2.0 * s2)) / (2.0 * std::numbers::pi * s2);
}

double thomas_pcf_minus_one(double r, double kappa, double omega) {
  double s2 = omega * omega;
  return std::exp(-r * r / (4.0 * s2)) / (4.0 * std::numbers::pi * s2 * kappa);
}

PointPattern simulate_thomas(const ThomasParams& params, const CovariateList& covariates,
                             const Window& win, const RngSeed& rng) {
  if (!(params.kappa > 0.0) || !(params.omega > 0.0)) {
    throw PreconditionError("Thomas process needs kappa > 0 and omega > 0");
  }
  for (const auto& c : covariates) {
    if (!c.window().contains(win)) {
      throw ConfigError("covariate rasters do not cover the simulation window");
    }
  }
  LogLinearIntensity rho(covariates, params.beta);
  const double rho_max = rho.upper_bound(win);
  const Window parents_win = dilate(win, 4.0 * params.omega);

  auto eng = rng.engine();
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uint64_t n_parents = poisson_count(params.kappa * area(parents_win), eng);
  std::vector<Point> pts;
  for (std::uint64_t k = 0; k < n_parents; ++k) {
    Point c = uniform_point(parents_win, eng);
    // candidate offspring carry intensity rho_max * k(u - c) / kappa
    std::uint64_t n_off = poisson_count(rho_max / params.kappa, eng);
    for (std::uint64_t i = 0; i < n_off; ++i) {
      Point u{c.x + params.omega * gauss(eng), c.y + params.omega * gauss(eng)};
      double keep = uniform01(eng);
      if (!win.contains(u)) continue;
      if (keep * rho_max < rho(u)) pts.push_back(u);
    }
  }
  return PointPattern(win, std::move(pts));
}

double calibrate_intercept(std::span<const double> slopes, const CovariateList& covariates,
                           const Window& win, double target_mean) {
  if (!(target_mean > 0.0)) throw DomainError("target mean must be positive");
  if (slopes.size() != covariates.size()) {
    throw ConfigError("one slope per covariate is required");
  }
  double mass = pixel_integral(covariates, win, [&](std::span<const double> z) {
    double eta = 0.0;
    for (std::size_t j = 0; j < z.size(); ++j) eta += slopes[j] * z[j];
    return std::exp(eta);
  });
  return std::log(target_mean / mass);
}

double erosion_for_mean(std::span<const double> beta, const CovariateList& covariates,
                        const Window& win, double target_mean) {
  LogLinearIntensity rho(covariates, std::vector<double>(beta.begin(), beta.end()));
  double full = rho.integral(win);
  if (!(target_mean > 0.0) || target_mean > full) {
    throw DomainError("target mean must lie in (0, expected count on the full window]");
  }
  double lo = 0.0, hi = 0.5 * win.min_side();
  for (int it = 0; it < 200 && hi - lo > 1e-12 * win.min_side(); ++it) {
    double mid = 0.5 * (lo + hi);
    if (rho.integral(erode(win, mid)) > target_mean) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

CovariateList reference_terrain(int nx, int ny, const Window& window) {
  if (nx < 2 || ny < 2) throw ConfigError("reference terrain needs at least 2x2 pixels");
  const double dx = window.width() / nx, dy = window.height() / ny;
  const double sx = 1000.0 / window.width(), sy = 500.0 / window.height();
  const double two_pi = 2.0 * std::numbers::pi;
  std::vector<double> elev(static_cast<std::size_t>(nx) * ny);
  for (int iy = 0; iy < ny; ++iy) {
    for (int ix = 0; ix < nx; ++ix) {
      double x = (ix + 0.5) * dx * sx, y = (iy + 0.5) * dy * sy;
      double e = 0.9 * std::exp(-((x - 720) * (x - 720) / (2 * 180.0 * 180.0) +
                                  (y - 330) * (y - 330) / (2 * 120.0 * 120.0))) +
                 0.6 * std::exp(-((x - 250) * (x - 250) / (2 * 150.0 * 150.0) +
                                  (y - 150) * (y - 150) / (2 * 110.0 * 110.0))) +
                 0.35 * std::cos(two_pi * x / 640 + 0.7) * std::cos(two_pi * y / 520 + 0.3) +
                 0.2 * std::sin(two_pi * (x + y) / 410) + 0.25 * y / 500;
      // a concave squash flattens the summits
      elev[static_cast<std::size_t>(iy) * nx + ix] = -std::exp(-0.2 * e);
    }
  }
  auto at = [&](int ix, int iy) { return elev[static_cast<std::size_t>(iy) * nx + ix]; };
  // central differences inside, one-sided on the border
  auto deriv = [](double lo, double hi, double span) { return (hi - lo) / span; };
  std::vector<double> slope(elev.size());
  for (int iy = 0; iy < ny; ++iy) {
    for (int ix = 0; ix < nx; ++ix) {
      double gx = ix == 0        ? deriv(at(0, iy), at(1, iy), dx)
                  : ix == nx - 1 ? deriv(at(nx - 2, iy), at(nx - 1, iy), dx)
                                 : deriv(at(ix - 1, iy), at(ix + 1, iy), 2 * dx);
      double gy = iy == 0        ? deriv(at(ix, 0), at(ix, 1), dy)
                  : iy == ny - 1 ? deriv(at(ix, ny - 2), at(ix, ny - 1), dy)
                                 : deriv(at(ix, iy - 1), at(ix, iy + 1), 2 * dy);
      slope[static_cast<std::size_t>(iy) * nx + ix] = std::hypot(gx, gy);
    }
  }
  return {standardize(CovariateField(nx, ny, window, std::move(elev))),
          standardize(CovariateField(nx, ny, window, std::move(slope)))};
}

Eigen::MatrixXd scenario_correlation(int p) {
  Eigen::MatrixXd omega(p, p);
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < p; ++j) omega(i, j) = std::pow(0.7, std::abs(i - j));
  }
  if (p >= 2) omega(0, 1) = omega(1, 0) = 0.0;
  return omega;
}

Eigen::MatrixXd upper_cholesky(const Eigen::MatrixXd& omega) {
  Eigen::LLT<Eigen::MatrixXd> llt(omega);
  if (llt.info() != Eigen::Success) throw DomainError("matrix is not positive definite");
  return llt.matrixU();
}

CovariateList mix_covariates(const CovariateList& x, const Eigen::MatrixXd& v) {
  const auto p = static_cast<Eigen::Index>(x.size());
  if (v.rows() != p || v.cols() != p) throw ConfigError("mixing matrix does not match rasters");
  if (x.empty()) return {};
  if (!shares_grid(x)) throw ConfigError("mixing needs rasters on one grid");
  const auto n = x.front().values().size();
  CovariateList out;
  for (Eigen::Index j = 0; j < p; ++j) {
    std::vector<double> vals(n, 0.0);
    for (Eigen::Index i = 0; i < p; ++i) {
      double c = v(i, j);  // z_j = sum_i V_ij x_i
      if (c == 0.0) continue;
      auto xi = x[static_cast<std::size_t>(i)].values();
      for (std::size_t k = 0; k < n; ++k) vals[k] += c * xi[k];
    }
    const auto& g = x.front();
    out.emplace_back(g.nx(), g.ny(), g.window(), std::move(vals));
  }
  return out;
}

CovariateList gen_scenario_covariates(int scenario, const RngSeed& rng,
                                      const std::optional<CovariateList>& aux) {
  if (scenario < 1 || scenario > 3) throw ConfigError("scenario must be 1, 2 or 3");
  if (scenario == 3) {
    if (!aux || aux->size() != 15) {
      throw ConfigError("scenario 3 needs 15 rasters (elevation, gradient, 13 soil layers)");
    }
    CovariateList out;
    for (const auto& f : *aux) out.push_back(standardize(f));
    return out;
  }
  if (!aux || aux->size() < 2) {
    throw ConfigError("scenarios 1 and 2 need the elevation and gradient rasters");
  }
  CovariateList x{standardize((*aux)[0]), standardize((*aux)[1])};
  if (!x[0].same_grid(x[1])) throw ConfigError("elevation and gradient rasters differ in grid");
  const int nx = x[0].nx(), ny = x[0].ny();
  const Window grid = x[0].window();
  auto eng = rng.engine();
  std::normal_distribution<double> gauss(0.0, 1.0);
  x.reserve(20);
  for (int k = 0; k < 18; ++k) {
    std::vector<double> vals(static_cast<std::size_t>(nx) * ny);
    for (auto& v : vals) v = gauss(eng);
    x.emplace_back(nx, ny, grid, std::move(vals));
  }
  if (scenario == 1) return x;
  return mix_covariates(x, upper_cholesky(scenario_correlation(20)));
}

DummyKind parse_dummy_kind(const std::string& name) {
  if (name == "poisson") return DummyKind::poisson;
  if (name == "binomial") return DummyKind::binomial;
  if (name == "stratified") return DummyKind::stratified;
  throw ConfigError("unknown dummy process '" + name + "'");
}

PointPattern dummy_process(DummyKind kind, int nd, const Window& win, const RngSeed& rng) {
  if (nd < 1) throw PreconditionError("nd must be at least 1");
  auto eng = rng.engine();
  const auto n2 = static_cast<std::uint64_t>(nd) * static_cast<std::uint64_t>(nd);
  std::vector<Point> pts;
  switch (kind) {
    case DummyKind::poisson: {
      auto n = poisson_count(static_cast<double>(n2), eng);
      for (std::uint64_t i = 0; i < n; ++i) pts.push_back(uniform_point(win, eng));
      break;
    }
    case DummyKind::binomial:
      for (std::uint64_t i = 0; i < n2; ++i) pts.push_back(uniform_point(win, eng));
      break;
    case DummyKind::stratified: {
      const double dx = win.width() / nd, dy = win.height() / nd;
      for (int iy = 0; iy < nd; ++iy) {
        for (int ix = 0; ix < nd; ++ix) {
          double x = std::min(win.x_min() + (ix + uniform01(eng)) * dx, win.x_max());
          double y = std::min(win.y_min() + (iy + uniform01(eng)) * dy, win.y_max());
          pts.push_back({x, y});
        }
      }
      break;
    }
  }
  return PointPattern(win, std::move(pts));
}

}  // namespace ppr
