#include "ppr/summaries.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "ppr/error.hpp"

namespace ppr {

double ripley_k(const PointPattern& pattern, std::span<const double> rho_at, double r) {
  const Window& win = pattern.window();
  if (!(r > 0.0)) throw DomainError("r must be positive");
  if (r >= win.min_side()) throw RangeError("r must be below the shorter window side");
  const std::size_t m = pattern.size();
  if (rho_at.size() != m) throw ConfigError("one intensity value per point required");
  for (double v : rho_at) {
    if (!(v > 0.0)) throw DomainError("rho_hat must be positive at every data point");
  }
  if (m < 2) return 0.0;

  // sweep in x order; only pairs with |dx| <= r can count
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return pattern[a].x < pattern[b].x || (pattern[a].x == pattern[b].x && a < b);
  });
  const double lx = win.width(), ly = win.height(), r2 = r * r;
  double total = 0.0;
  for (std::size_t a = 0; a < m; ++a) {
    const Point u = pattern[order[a]];
    const double ru = rho_at[order[a]];
    for (std::size_t b = a + 1; b < m; ++b) {
      const Point v = pattern[order[b]];
      double dx = v.x - u.x;
      if (dx > r) break;
      double dy = v.y - u.y;
      if (dx * dx + dy * dy > r2) continue;
      double overlap = (lx - std::abs(dx)) * (ly - std::abs(dy));
      total += 1.0 / (ru * rho_at[order[b]] * overlap);
    }
  }
  return 2.0 * total;
}

namespace {
std::vector<double> evaluate(const PointPattern& pattern, const RhoFn& rho_hat) {
  std::vector<double> out(pattern.size());
  for (std::size_t i = 0; i < pattern.size(); ++i) out[i] = rho_hat(pattern[i]);
  return out;
}
}  // namespace

double ripley_k(const PointPattern& pattern, const RhoFn& rho_hat, double r) {
  return ripley_k(pattern, evaluate(pattern, rho_hat), r);
}

double f_hat(const PointPattern& pattern, std::span<const double> rho_at, double r) {
  return ripley_k(pattern, rho_at, r) - std::numbers::pi * r * r;
}

double f_hat(const PointPattern& pattern, const RhoFn& rho_hat, double r) {
  return f_hat(pattern, evaluate(pattern, rho_hat), r);
}

double default_r(const Window& win) { return win.min_side() / 8.0; }

WeightSurface unit_surface(std::size_t n) { return {std::vector<double>(n, 1.0), SurfaceSource::unit}; }

WeightSurface weight_surface_poisson(std::span<const double> rho_at, double f, double f_floor) {
  const double ff = std::max(f, f_floor);
  WeightSurface s{std::vector<double>(rho_at.size()), SurfaceSource::poisson};
  for (std::size_t i = 0; i < rho_at.size(); ++i) {
    if (!(rho_at[i] >= 0.0)) throw DomainError("rho_hat must be nonnegative");
    s.values[i] = 1.0 / (1.0 + rho_at[i] * ff);
  }
  return s;
}

WeightSurface weight_surface_logistic(std::span<const double> rho_at,
                                      std::span<const double> delta_at, double f,
                                      double f_floor) {
  if (rho_at.size() != delta_at.size()) throw ConfigError("rho and delta lengths differ");
  const double ff = std::max(f, f_floor);
  WeightSurface s{std::vector<double>(rho_at.size()), SurfaceSource::logistic};
  for (std::size_t i = 0; i < rho_at.size(); ++i) {
    const double rho = rho_at[i], d = delta_at[i];
    if (!(rho >= 0.0)) throw DomainError("rho_hat must be nonnegative");
    if (!(d > 0.0)) throw DomainError("delta must be positive");
    s.values[i] = (rho + d) / (d * (1.0 + rho * ff));
  }
  return s;
}

SandwichVariance sandwich_variance(const QuadratureScheme& scheme, std::span<const double> beta_hat,
                                   std::span<const int> support,
                                   std::span<const double> penalty_d2,
                                   const std::optional<PairCorrelationFn>& g_minus_1) {
  const auto q = static_cast<std::size_t>(scheme.Z.cols());
  if (beta_hat.size() != q) throw ConfigError("beta_hat length does not match the design");
  if (penalty_d2.size() != support.size()) {
    throw ConfigError("one penalty curvature per support coefficient required");
  }
  SandwichVariance out;
  out.index.push_back(0);
  for (int j : support) {
    if (j < 1 || static_cast<std::size_t>(j) >= q) throw ConfigError("support index out of range");
    out.index.push_back(j);
  }
  const auto s = static_cast<Eigen::Index>(out.index.size());
  const double area = scheme.area();
  const auto n = scheme.size();
  const Eigen::Map<const Eigen::VectorXd> beta(beta_hat.data(), static_cast<Eigen::Index>(q));

  // Per-row integration weight, effective surface weight and intensity.
  // Poisson kind: all rows with v_i. Logistic kind: dummies with 1/delta and
  // w scaled by delta / (rho + delta).
  std::vector<std::size_t> rows;
  std::vector<double> mass, weff, rho;
  const bool logistic = scheme.kind == SchemeKind::logistic;
  for (std::size_t i = 0; i < n; ++i) {
    if (logistic && scheme.is_data[i]) continue;
    const auto r = static_cast<Eigen::Index>(i);
    double eta = std::clamp(double(scheme.Z.row(r).dot(beta)), -30.0, 30.0);
    double rh = std::exp(eta);
    rows.push_back(i);
    rho.push_back(rh);
    if (logistic) {
      double d = scheme.delta(i);
      mass.push_back(1.0 / d);
      weff.push_back(scheme.w[i] * d / (rh + d));
    } else {
      mass.push_back(scheme.v[i]);
      weff.push_back(scheme.w[i]);
    }
  }

  auto zsub = [&](std::size_t i) {
    Eigen::VectorXd z(s);
    for (Eigen::Index k = 0; k < s; ++k) {
      z(k) = scheme.Z(static_cast<Eigen::Index>(i), out.index[static_cast<std::size_t>(k)]);
    }
    return z;
  };

  out.A11 = Eigen::MatrixXd::Zero(s, s);
  out.B11 = Eigen::MatrixXd::Zero(s, s);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    Eigen::VectorXd z = zsub(rows[k]);
    double base = mass[k] * rho[k] * weff[k];
    out.A11.noalias() += base * z * z.transpose();
    out.B11.noalias() += base * weff[k] * z * z.transpose();
  }

  out.C11 = Eigen::MatrixXd::Zero(s, s);
  if (g_minus_1) {
    // double sum over dummy locations only
    std::vector<std::size_t> dummy;
    for (std::size_t k = 0; k < rows.size(); ++k) {
      if (scheme.is_data[rows[k]]) continue;
      dummy.push_back(k);
    }
    const double cell = logistic ? 0.0 : area / static_cast<double>(dummy.size());
    Eigen::MatrixXd zw(s, static_cast<Eigen::Index>(dummy.size()));
    for (std::size_t a = 0; a < dummy.size(); ++a) {
      std::size_t k = dummy[a];
      double m = logistic ? mass[k] : cell;
      zw.col(static_cast<Eigen::Index>(a)) = m * weff[k] * rho[k] * zsub(rows[k]);
    }
    for (std::size_t a = 0; a < dummy.size(); ++a) {
      const Point u = scheme.locations[rows[dummy[a]]];
      Eigen::VectorXd acc = Eigen::VectorXd::Zero(s);
      for (std::size_t b = 0; b < dummy.size(); ++b) {
        if (a == b) continue;
        double g = (*g_minus_1)(u, scheme.locations[rows[dummy[b]]]);
        if (g != 0.0) acc += g * zw.col(static_cast<Eigen::Index>(b));
      }
      out.C11.noalias() += zw.col(static_cast<Eigen::Index>(a)) * acc.transpose();
    }
    out.C11 = 0.5 * (out.C11 + out.C11.transpose());
  }

  out.Pi = Eigen::MatrixXd::Zero(s, s);
  for (std::size_t k = 0; k < support.size(); ++k) {
    out.Pi(static_cast<Eigen::Index>(k + 1), static_cast<Eigen::Index>(k + 1)) = penalty_d2[k];
  }
  Eigen::MatrixXd h = out.A11 + area * out.Pi;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(h);
  lu.setThreshold(1e-12);
  if (!lu.isInvertible()) throw RankError("A11 + |D| Pi is numerically singular");
  Eigen::MatrixXd hinv = lu.inverse();
  out.Sigma = area * hinv * (out.B11 + out.C11) * hinv.transpose();
  out.Sigma = 0.5 * (out.Sigma + out.Sigma.transpose());
  out.se.resize(static_cast<std::size_t>(s));
  for (Eigen::Index k = 0; k < s; ++k) {
    out.se[static_cast<std::size_t>(k)] = std::sqrt(std::max(0.0, out.Sigma(k, k)) / area);
  }
  return out;
}

}  // namespace ppr
