#include "ppr/penalty.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ppr/error.hpp"

namespace ppr {

Family parse_family(const std::string& name) {
  if (name == "ridge") return Family::ridge;
  if (name == "lasso") return Family::lasso;
  if (name == "enet") return Family::enet;
  if (name == "al") return Family::al;
  if (name == "aenet") return Family::aenet;
  if (name == "scad") return Family::scad;
  if (name == "mcplus") return Family::mcplus;
  throw ConfigError("unknown penalty family '" + name + "'");
}

std::string family_name(Family f) {
  switch (f) {
    case Family::ridge: return "ridge";
    case Family::lasso: return "lasso";
    case Family::enet: return "enet";
    case Family::al: return "al";
    case Family::aenet: return "aenet";
    case Family::scad: return "scad";
    case Family::mcplus: return "mcplus";
  }
  return "?";
}

bool is_adaptive(Family f) { return f == Family::al || f == Family::aenet; }
bool is_convex(Family f) { return f != Family::scad && f != Family::mcplus; }

double default_gamma(Family f) {
  switch (f) {
    case Family::scad: return 3.7;
    case Family::mcplus: return 3.0;
    case Family::enet:
    case Family::aenet: return 0.5;
    default: return 0.0;
  }
}

PenaltySpec PenaltySpec::make(Family f, double lambda) { return make(f, lambda, default_gamma(f)); }

PenaltySpec PenaltySpec::make(Family f, double lambda, double gamma) {
  PenaltySpec s;
  s.family = f;
  s.lambda = lambda;
  s.gamma = gamma;
  s.validate();
  return s;
}

double PenaltySpec::lambda_for(std::size_t j) const {
  return per_coef_lambda.empty() ? lambda : per_coef_lambda.at(j);
}

void PenaltySpec::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be >= 0");
  for (double l : per_coef_lambda) {
    if (!(l >= 0.0)) throw ConfigError("per-coefficient lambdas must be >= 0");
  }
  switch (family) {
    case Family::enet:
    case Family::aenet:
      if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("elastic net needs 0 < gamma < 1");
      break;
    case Family::scad:
      if (!(gamma > 2.0)) throw ConfigError("SCAD needs gamma > 2");
      break;
    case Family::mcplus:
      if (!(gamma > 1.0)) throw ConfigError("MC+ needs gamma > 1");
      break;
    default:
      break;
  }
}

double enet_mix(Family f, double gamma) {
  switch (f) {
    case Family::ridge: return 0.0;
    case Family::lasso:
    case Family::al: return 1.0;
    case Family::enet:
    case Family::aenet: return gamma;
    default: throw ConfigError("not an elastic-net type family");
  }
}

double penalty_value(Family f, double lam, double gam, double t) {
  if (!(t >= 0.0)) throw DomainError("penalty argument must be nonnegative");
  switch (f) {
    case Family::scad:
      if (t <= lam) return lam * t;
      if (t <= gam * lam) return (gam * lam * t - 0.5 * (t * t + lam * lam)) / (gam - 1.0);
      return lam * lam * (gam * gam - 1.0) / (2.0 * (gam - 1.0));
    case Family::mcplus:
      if (t <= gam * lam) return lam * t - t * t / (2.0 * gam);
      return 0.5 * gam * lam * lam;
    default: {
      double a = enet_mix(f, gam);
      return lam * (a * t + 0.5 * (1.0 - a) * t * t);
    }
  }
}

namespace {

// right-hand derivative, also defined at 0
double d1_right(Family f, double lam, double gam, double t) {
  switch (f) {
    case Family::scad:
      if (t < lam) return lam;
      if (t < gam * lam) return (gam * lam - t) / (gam - 1.0);
      return 0.0;
    case Family::mcplus:
      if (t < gam * lam) return lam - t / gam;
      return 0.0;
    default: {
      double a = enet_mix(f, gam);
      return lam * ((1.0 - a) * t + a);
    }
  }
}

double d2_right(Family f, double lam, double gam, double t) {
  switch (f) {
    case Family::scad:
      if (t < lam) return 0.0;
      if (t < gam * lam) return -1.0 / (gam - 1.0);
      return 0.0;
    case Family::mcplus:
      if (t < gam * lam) return -1.0 / gam;
      return 0.0;
    default:
      return lam * (1.0 - enet_mix(f, gam));
  }
}

}  // namespace

double penalty_d1(Family f, double lam, double gam, double t) {
  if (!(t > 0.0)) throw DomainError("penalty derivative is undefined at 0");
  return d1_right(f, lam, gam, t);
}

double penalty_d2(Family f, double lam, double gam, double t) {
  if (!(t > 0.0)) throw DomainError("penalty derivative is undefined at 0");
  return d2_right(f, lam, gam, t);
}

double penalty_value(const PenaltySpec& s, double t, std::size_t j) {
  return penalty_value(s.family, s.lambda_for(j), s.gamma, t);
}
double penalty_d1(const PenaltySpec& s, double t, std::size_t j) {
  return penalty_d1(s.family, s.lambda_for(j), s.gamma, t);
}
double penalty_d2(const PenaltySpec& s, double t, std::size_t j) {
  return penalty_d2(s.family, s.lambda_for(j), s.gamma, t);
}

double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

double cd_update(Family f, double g, double eta, double lam, double gam) {
  if (!(eta > 0.0)) throw DomainError("eta_tilde must be positive");
  const double ag = std::abs(g);
  switch (f) {
    case Family::scad:
      if (!(gam > 1.0 + 1.0 / eta)) throw ConfigError("SCAD update needs gamma > 1 + 1/eta");
      if (ag <= lam * (eta + 1.0)) return soft_threshold(g, lam) / eta;
      if (ag <= eta * lam * gam) {
        return soft_threshold(g, gam * lam / (gam - 1.0)) / (eta - 1.0 / (gam - 1.0));
      }
      return g / eta;
    case Family::mcplus:
      if (!(gam > 1.0 / eta)) throw ConfigError("MC+ update needs gamma > 1/eta");
      if (ag <= eta * lam * gam) return soft_threshold(g, lam) / (eta - 1.0 / gam);
      return g / eta;
    default: {
      double a = enet_mix(f, gam);
      return soft_threshold(g, lam * a) / (eta + lam * (1.0 - a));
    }
  }
}

std::vector<double> adaptive_lambdas(std::span<const double> beta_ridge, double lambda) {
  std::vector<double> out(beta_ridge.size());
  for (std::size_t j = 0; j < out.size(); ++j) {
    out[j] = lambda / std::max(std::abs(beta_ridge[j]), 1e-8);
  }
  return out;
}

RateSequences theory_sequences(const PenaltySpec& spec, std::span<const double> beta0, double area) {
  if (!(area > 0.0)) throw DomainError("area must be positive");
  const double eps = 1.0 / std::sqrt(area);  // K_1 = 1
  const bool adaptive = is_adaptive(spec.family) && !spec.per_coef_lambda.empty();
  auto lam = [&](std::size_t j) { return adaptive ? spec.lambda_for(j) : spec.lambda; };

  RateSequences r;
  double b = std::numeric_limits<double>::infinity();
  bool any_zero = false;
  for (std::size_t j = 0; j < beta0.size(); ++j) {
    double t = std::abs(beta0[j]);
    if (t > 0.0) {
      r.a_n = std::max(r.a_n, std::abs(d1_right(spec.family, lam(j), spec.gamma, t)));
      r.c_n = std::max(r.c_n, std::abs(d2_right(spec.family, lam(j), spec.gamma, t)));
    } else {
      any_zero = true;
      // p' is monotone on (0, eps], so the infimum sits at an end
      double lo = std::min(d1_right(spec.family, lam(j), spec.gamma, 0.0),
                           d1_right(spec.family, lam(j), spec.gamma, eps));
      b = std::min(b, lo);
    }
  }
  if (!adaptive && !any_zero) {
    b = std::min(d1_right(spec.family, spec.lambda, spec.gamma, 0.0),
                 d1_right(spec.family, spec.lambda, spec.gamma, eps));
  }
  r.b_n = b;
  return r;
}

}  // namespace ppr
