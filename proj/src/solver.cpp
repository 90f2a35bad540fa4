#include "ppr/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ppr/error.hpp"

namespace ppr {

Method parse_method(const std::string& name) {
  if (name == "pl") return Method::pl;
  if (name == "wpl") return Method::wpl;
  if (name == "logit") return Method::logit;
  if (name == "wlogit") return Method::wlogit;
  throw ConfigError("unknown method '" + name + "'");
}

std::string method_name(Method m) {
  switch (m) {
    case Method::pl: return "pl";
    case Method::wpl: return "wpl";
    case Method::logit: return "logit";
    case Method::wlogit: return "wlogit";
  }
  return "?";
}

void FitConfig::validate() const {
  if (n_lambda < 1) throw ConfigError("n_lambda must be >= 1");
  if (!(lambda_min_ratio > 0.0 && lambda_min_ratio < 1.0)) {
    throw ConfigError("lambda_min_ratio must lie in (0, 1)");
  }
  if (!(cd_tol > 0.0)) throw ConfigError("cd_tol must be positive");
  if (max_irls < 1 || max_cd < 1) throw ConfigError("iteration caps must be positive");
  if (nd < 0) throw ConfigError("nd must be positive");
  if (!(r >= 0.0) || !(delta >= 0.0)) throw ConfigError("r and delta must be positive");
  if (penalty) penalty->validate();
}

namespace {

constexpr double kClamp = 30.0;
// Outer stopping rule on the coefficient change. The surrogate is exact to
// second order, so the gradient error left behind is O(change^2).
constexpr double kIrlsTol = 1e-6;

using Vec = Eigen::VectorXd;

Vec as_vec(std::span<const double> b) {
  return Eigen::Map<const Vec>(b.data(), static_cast<Eigen::Index>(b.size()));
}

std::vector<double> as_std(const Vec& v) { return {v.data(), v.data() + v.size()}; }

double sigmoid(double t) {
  return t >= 0.0 ? 1.0 / (1.0 + std::exp(-t)) : std::exp(t) / (1.0 + std::exp(t));
}

double softplus(double t) { return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

void check_beta(const QuadratureScheme& s, const Vec& beta) {
  if (beta.size() != s.Z.cols()) throw ConfigError("coefficient length does not match the design");
}

// Linear predictor, clamped to [-30, 30] for the Poisson kind.
Vec predictor(const QuadratureScheme& s, const Vec& beta, bool* clamped) {
  check_beta(s, beta);
  Vec eta = s.Z * beta;
  if (s.kind == SchemeKind::poisson) {
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
      if (std::abs(eta(i)) > kClamp) {
        eta(i) = std::clamp(eta(i), -kClamp, kClamp);
        if (clamped) *clamped = true;
      }
    }
  }
  return eta;
}

double loglik(const QuadratureScheme& s, const Vec& beta, bool* clamped = nullptr) {
  Vec eta = predictor(s, beta, clamped);
  double ll = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double e = eta(static_cast<Eigen::Index>(i));
    const double d = s.is_data[i] ? 1.0 : 0.0;
    if (s.kind == SchemeKind::poisson) {
      ll += s.w[i] * (d * e - s.v[i] * std::exp(e));
    } else {
      const double t = e + s.v[i];
      ll += s.w[i] * (d * t - softplus(t));
    }
  }
  return ll;
}

// nu_i and nu_i (y*_i - eta_i) at beta.
void working(const QuadratureScheme& s, const Vec& beta, Vec& nu, Vec& rw, bool* clamped) {
  Vec eta = predictor(s, beta, clamped);
  const auto n = eta.size();
  nu.resize(n);
  rw.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    const double d = s.is_data[k] ? 1.0 : 0.0;
    if (s.kind == SchemeKind::poisson) {
      const double mu = s.v[k] * std::exp(eta(i));
      nu(i) = s.w[k] * mu;
      rw(i) = s.w[k] * (d - mu);
    } else {
      const double p = sigmoid(eta(i) + s.v[k]);
      nu(i) = s.w[k] * p * (1.0 - p);
      rw(i) = s.w[k] * (d - p);
    }
  }
}

Eigen::MatrixXd gram(const QuadratureScheme& s, const Vec& nu) {
  Eigen::MatrixXd wz = s.Z.array().colwise() * nu.array().sqrt();
  const auto q = s.Z.cols();
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(q, q);
  g.selfadjointView<Eigen::Lower>().rankUpdate(wz.transpose());
  return g.selfadjointView<Eigen::Lower>();
}

struct PenaltyCtx {
  Family family = Family::lasso;
  double gamma = 0.0;
  std::vector<double> lambdas;  // per covariate; empty: unpenalized
};

double penalty_sum(const PenaltyCtx& pc, const Vec& beta) {
  double total = 0.0;
  for (std::size_t j = 0; j < pc.lambdas.size(); ++j) {
    total += penalty_value(pc.family, pc.lambdas[j], pc.gamma,
                           std::abs(beta(static_cast<Eigen::Index>(j + 1))));
  }
  return total;
}

double objective(const QuadratureScheme& s, const Vec& beta, const PenaltyCtx& pc) {
  return -loglik(s, beta) / s.area() + penalty_sum(pc, beta);
}

double max_abs(const Vec& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

// Cyclic coordinate descent on  1/2 b'Gb - c'b + sum p_lambda_j(|b_j|),
// coordinate 0 unpenalized.
void cd_solve(const Eigen::MatrixXd& G, const Vec& c, Vec& beta, const PenaltyCtx& pc,
              const FitConfig& cfg, Diagnostics& diag) {
  const auto q = G.rows();
  const bool convex = is_convex(pc.family);
  auto surrogate = [&] { return 0.5 * beta.dot(G * beta) - c.dot(beta) + penalty_sum(pc, beta); };
  double q_old = convex ? surrogate() : 0.0;
  for (int sweep = 0; sweep < cfg.max_cd; ++sweep) {
    ++diag.cd_sweeps;
    double change = 0.0;
    for (Eigen::Index j = 0; j < q; ++j) {
      const double gjj = G(j, j);
      if (!(gjj > 0.0)) continue;
      const double g = c(j) - (G.row(j).dot(beta) - gjj * beta(j));
      double updated;
      const double lam = j == 0 ? 0.0 : pc.lambdas[static_cast<std::size_t>(j - 1)];
      if (lam == 0.0) {
        updated = g / gjj;
      } else if (convex) {
        updated = cd_update(pc.family, g, gjj, lam, pc.gamma);
      } else {
        // raise the curvature until the univariate problem is convex; the
        // update then minimizes a majorizer of the coordinate objective
        const double need = pc.family == Family::scad ? 1.0 / (pc.gamma - 1.0) : 1.0 / pc.gamma;
        double eta = gjj;
        if (!(gjj > need)) {
          eta = 1.05 * need;
          ++diag.inflated_updates;
        }
        updated = cd_update(pc.family, g + (eta - gjj) * beta(j), eta, lam, pc.gamma);
      }
      change = std::max(change, std::abs(updated - beta(j)));
      beta(j) = updated;
    }
    if (convex) {
      double q_new = surrogate();
      if (q_new > q_old + 1e-8 * std::max(1.0, std::abs(q_old))) {
        throw AlgorithmError("coordinate descent increased a convex objective");
      }
      q_old = q_new;
    }
    if (change <= cfg.cd_tol * std::max(1.0, max_abs(beta))) return;
  }
}

// Penalized IRLS from the warm start `beta`. Returns false if max_irls hit.
bool solve_penalized(const QuadratureScheme& s, Vec& beta, const PenaltyCtx& pc,
                     const FitConfig& cfg, Diagnostics& diag) {
  const double area = s.area();
  double f_old = objective(s, beta, pc);
  Vec nu, rw;
  for (int it = 0; it < cfg.max_irls; ++it) {
    ++diag.irls_iterations;
    working(s, beta, nu, rw, &diag.clamped);
    Eigen::MatrixXd G = gram(s, nu) / area;
    Vec c = s.Z.transpose() * rw / area + G * beta;
    Vec cand = beta;
    cd_solve(G, c, cand, pc, cfg, diag);

    Vec next = cand;
    double f_new = objective(s, next, pc);
    double t = 1.0;
    int halvings = 0;
    const double slack = 1e-12 * std::max(1.0, std::abs(f_old));
    while (f_new > f_old + slack && halvings < 30) {
      t *= 0.5;
      next = beta + t * (cand - beta);
      f_new = objective(s, next, pc);
      ++halvings;
    }
    if (f_new > f_old + slack) return true;  // no descent left at this precision
    const double change = max_abs(next - beta);
    beta = next;
    f_old = f_new;
    if (change <= kIrlsTol * std::max(1.0, max_abs(beta))) return true;
  }
  return false;
}

int count_support(const Vec& beta) {
  int s = 0;
  for (Eigen::Index j = 1; j < beta.size(); ++j) s += beta(j) != 0.0;
  return s;
}

Standardization identity_standardization(std::size_t p) {
  return {std::vector<double>(p, 0.0), std::vector<double>(p, 1.0)};
}

std::vector<double> penalty_factors(const PenaltySpec& pen, std::size_t p) {
  if (pen.per_coef_lambda.empty()) return std::vector<double>(p, 1.0);
  if (pen.per_coef_lambda.size() != p) {
    throw ConfigError("per_coef_lambda needs one entry per covariate");
  }
  std::vector<double> pf = pen.per_coef_lambda;
  if (pen.lambda > 0.0) {
    for (double& x : pf) x /= pen.lambda;
  }
  return pf;
}

double l1_fraction(Family f, double gamma) {
  switch (f) {
    case Family::ridge: return 1e-3;
    case Family::scad:
    case Family::mcplus: return 1.0;
    default: return enet_mix(f, gamma);
  }
}

Vec null_beta(const QuadratureScheme& s) {
  Vec b = Vec::Zero(s.Z.cols());
  b(0) = null_intercept(s);
  return b;
}

std::vector<double> grid_internal(const QuadratureScheme& sz, Family f, double gamma,
                                  const std::vector<double>& pf, const FitConfig& cfg,
                                  double* lambda_max_out) {
  Vec g = score(sz, as_std(null_beta(sz))) / sz.area();
  const double frac = l1_fraction(f, gamma);
  double lmax = 0.0;
  for (std::size_t j = 0; j < pf.size(); ++j) {
    if (!(pf[j] > 0.0)) continue;
    lmax = std::max(lmax, std::abs(g(static_cast<Eigen::Index>(j + 1))) / (pf[j] * frac));
  }
  if (lambda_max_out) *lambda_max_out = lmax;
  if (!(lmax > 0.0)) return {0.0};
  std::vector<double> grid(static_cast<std::size_t>(cfg.n_lambda));
  for (int k = 0; k < cfg.n_lambda; ++k) {
    double frac_k = cfg.n_lambda == 1 ? 0.0 : double(k) / (cfg.n_lambda - 1);
    grid[static_cast<std::size_t>(k)] = lmax * std::pow(cfg.lambda_min_ratio, frac_k);
  }
  return grid;
}

struct PathOut {
  std::vector<double> grid;
  std::vector<Vec> internal;
  std::vector<double> loglik;
  std::vector<int> s;
  std::vector<double> objective;
};

PathOut run_path(const QuadratureScheme& sz, Family f, double gamma, const std::vector<double>& pf,
                 const FitConfig& cfg, Diagnostics& diag) {
  PathOut out;
  out.grid = grid_internal(sz, f, gamma, pf, cfg, &diag.lambda_max);
  Vec beta = null_beta(sz);
  PenaltyCtx pc{f, gamma, std::vector<double>(pf.size())};
  for (double lam : out.grid) {
    for (std::size_t j = 0; j < pf.size(); ++j) pc.lambdas[j] = lam * pf[j];
    if (!solve_penalized(sz, beta, pc, cfg, diag)) ++diag.nonconverged;
    out.internal.push_back(beta);
    out.loglik.push_back(loglik(sz, beta));
    out.s.push_back(count_support(beta));
    out.objective.push_back(objective(sz, beta, pc));
  }
  return out;
}

int select_wqbic(const std::vector<double>& wq) {
  int best = 0;
  for (std::size_t k = 1; k < wq.size(); ++k) {
    if (wq[k] < wq[static_cast<std::size_t>(best)]) best = static_cast<int>(k);
  }
  return best;
}

void attach_se(FitResult& res, const QuadratureScheme& scheme, const Standardization& st,
               const PenaltyCtx& pc, const FitConfig& cfg) {
  if (!cfg.compute_se) return;
  std::vector<double> d2;
  for (int j : res.support) {
    const auto k = static_cast<std::size_t>(j - 1);
    if (pc.lambdas.empty()) {
      d2.push_back(0.0);
      continue;
    }
    const double sj = st.scale[k];
    d2.push_back(sj * sj *
                 penalty_d2(pc.family, pc.lambdas[k], pc.gamma, sj * std::abs(res.beta_hat[k + 1])));
  }
  try {
    auto sv = sandwich_variance(scheme, res.beta_hat, res.support, d2, cfg.g_minus_1);
    std::vector<double> se(res.beta_hat.size(), std::numeric_limits<double>::quiet_NaN());
    for (std::size_t k = 0; k < sv.index.size(); ++k) {
      se[static_cast<std::size_t>(sv.index[k])] = sv.se[k];
    }
    res.se = std::move(se);
  } catch (const RankError&) {
    res.se.reset();
  }
}

}  // namespace

// --- public likelihood pieces ----------------------------------------------

Working irls_working(const QuadratureScheme& scheme, std::span<const double> beta) {
  if (scheme.kind != SchemeKind::poisson) throw ConfigError("irls_working needs a Poisson scheme");
  Working out;
  Vec b = as_vec(beta);
  Vec eta = predictor(scheme, b, &out.clamped);
  Vec nu, rw;
  working(scheme, b, nu, rw, nullptr);
  out.nu = as_std(nu);
  out.ystar.resize(scheme.size());
  for (std::size_t i = 0; i < scheme.size(); ++i) {
    const double e = eta(static_cast<Eigen::Index>(i));
    const double mu = std::exp(e);
    const double y = scheme.is_data[i] ? 1.0 / scheme.v[i] : 0.0;
    out.ystar[i] = e + (y - mu) / mu;
  }
  return out;
}

double log_likelihood(const QuadratureScheme& scheme, std::span<const double> beta) {
  return loglik(scheme, as_vec(beta));
}

Eigen::VectorXd score(const QuadratureScheme& scheme, std::span<const double> beta) {
  Vec nu, rw;
  working(scheme, as_vec(beta), nu, rw, nullptr);
  return scheme.Z.transpose() * rw;
}

double null_intercept(const QuadratureScheme& s) {
  double m = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) m += s.is_data[i] ? s.w[i] : 0.0;
  if (!(m > 0.0)) throw ConvergenceError("intercept-only fit needs at least one data point");
  if (s.kind == SchemeKind::poisson) {
    double mass = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) mass += s.w[i] * s.v[i];
    return std::log(m / mass);
  }
  double mass = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) mass += s.is_data[i] ? 0.0 : s.w[i] / s.delta(i);
  if (!(mass > 0.0)) throw ConvergenceError("logistic fit needs dummy points");
  double b0 = std::log(m / mass);
  for (int it = 0; it < 200; ++it) {
    double g = 0.0, h = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      double p = sigmoid(b0 + s.v[i]);
      g += s.w[i] * ((s.is_data[i] ? 1.0 : 0.0) - p);
      h += s.w[i] * p * (1.0 - p);
    }
    double step = g / h;
    b0 += step;
    if (std::abs(step) < 1e-14 * std::max(1.0, std::abs(b0))) break;
  }
  return b0;
}

Standardization compute_standardization(const QuadratureScheme& scheme) {
  const std::size_t p = scheme.p();
  Standardization st = identity_standardization(p);
  if (p == 0) return st;
  Vec nu, rw;
  working(scheme, null_beta(scheme), nu, rw, nullptr);
  const double total = nu.sum();
  for (std::size_t j = 0; j < p; ++j) {
    auto col = scheme.Z.col(static_cast<Eigen::Index>(j + 1));
    double c = nu.dot(col) / total;
    double ss = (nu.array() * (col.array() - c).square()).sum() / scheme.area();
    st.center[j] = c;
    st.scale[j] = ss > 0.0 ? std::sqrt(ss) : 1.0;
  }
  return st;
}

QuadratureScheme apply_standardization(const QuadratureScheme& scheme, const Standardization& st) {
  QuadratureScheme out = scheme;
  for (std::size_t j = 0; j < st.center.size(); ++j) {
    auto col = out.Z.col(static_cast<Eigen::Index>(j + 1));
    col = (col.array() - st.center[j]) / st.scale[j];
  }
  return out;
}

std::vector<double> to_internal(std::span<const double> beta, const Standardization& st) {
  std::vector<double> out(beta.begin(), beta.end());
  for (std::size_t j = 0; j < st.center.size(); ++j) {
    out[j + 1] = beta[j + 1] * st.scale[j];
    out[0] += st.center[j] * beta[j + 1];
  }
  return out;
}

std::vector<double> to_original(std::span<const double> beta, const Standardization& st) {
  std::vector<double> out(beta.begin(), beta.end());
  for (std::size_t j = 0; j < st.center.size(); ++j) {
    out[j + 1] = beta[j + 1] / st.scale[j];
    out[0] -= st.center[j] * out[j + 1];
  }
  return out;
}

double wqbic_value(double loglik, int s, double area) { return -2.0 * loglik + s * std::log(area); }

// --- fitting -----------------------------------------------------------------

FitResult fit_unpenalized(const QuadratureScheme& scheme, const FitConfig& config) {
  config.validate();
  const double area = scheme.area();
  Standardization st =
      config.standardize ? compute_standardization(scheme) : identity_standardization(scheme.p());
  QuadratureScheme sz = config.standardize ? apply_standardization(scheme, st) : scheme;

  FitResult res;
  Diagnostics& diag = res.diagnostics;
  Vec beta = null_beta(sz);
  Vec nu, rw;
  bool converged = false;
  double grad_norm = std::numeric_limits<double>::infinity();
  for (int it = 0; it < config.max_irls; ++it) {
    ++diag.irls_iterations;
    working(sz, beta, nu, rw, &diag.clamped);
    Eigen::MatrixXd H = gram(sz, nu);
    Vec g = sz.Z.transpose() * rw;
    if (it == 0) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(H, Eigen::EigenvaluesOnly);
      const auto& ev = eig.eigenvalues();
      if (!(ev.minCoeff() > 1e-12 * ev.maxCoeff())) {
        throw RankError("design is numerically rank deficient");
      }
    }
    Vec step = H.ldlt().solve(g);
    double l_old = loglik(sz, beta);
    double t = 1.0;
    Vec next = beta + step;
    for (int h = 0; h < 30 && loglik(sz, next) < l_old - 1e-12 * std::abs(l_old); ++h) {
      t *= 0.5;
      next = beta + t * step;
    }
    beta = next;
    grad_norm = score(scheme, to_original(as_std(beta), st)).norm();
    if (t * max_abs(step) < 1e-10 * std::max(1.0, max_abs(beta)) && grad_norm < 1e-6 * area) {
      converged = true;
      break;
    }
  }
  if (!converged && !(grad_norm < 1e-6 * area)) {
    throw ConvergenceError("Newton iterations did not converge (gradient norm " +
                           format_real(grad_norm) + ")");
  }

  res.beta_internal = as_std(beta);
  res.beta_hat = to_original(res.beta_internal, st);
  const auto q = static_cast<Eigen::Index>(res.beta_hat.size());
  res.lambda_grid = {0.0};
  res.coef_path = Eigen::Map<const Eigen::RowVectorXd>(res.beta_hat.data(), q);
  const double ll = loglik(sz, beta);
  for (std::size_t j = 1; j < res.beta_hat.size(); ++j) {
    if (res.beta_hat[j] != 0.0) res.support.push_back(static_cast<int>(j));
  }
  res.wqbic = {wqbic_value(ll, static_cast<int>(res.support.size()), area)};
  res.selected_index = 0;
  diag.final_objective = -ll / area;
  diag.center = st.center;
  diag.scale = st.scale;
  diag.n_quadrature = scheme.size();
  attach_se(res, scheme, st, PenaltyCtx{}, config);
  return res;
}

std::vector<double> lambda_grid(const QuadratureScheme& scheme, const PenaltySpec& penalty,
                                const FitConfig& config) {
  config.validate();
  penalty.validate();
  Standardization st =
      config.standardize ? compute_standardization(scheme) : identity_standardization(scheme.p());
  QuadratureScheme sz = config.standardize ? apply_standardization(scheme, st) : scheme;
  return grid_internal(sz, penalty.family, penalty.gamma, penalty_factors(penalty, scheme.p()),
                       config, nullptr);
}

FitResult fit_path(const QuadratureScheme& scheme, const PenaltySpec& penalty,
                   const FitConfig& config) {
  config.validate();
  penalty.validate();
  const std::size_t p = scheme.p();
  const double area = scheme.area();
  Standardization st = config.standardize ? compute_standardization(scheme) : identity_standardization(p);
  QuadratureScheme sz = config.standardize ? apply_standardization(scheme, st) : scheme;

  FitResult res;
  Diagnostics& diag = res.diagnostics;
  std::vector<double> pf;
  if (is_adaptive(penalty.family) && penalty.per_coef_lambda.empty()) {
    Diagnostics pilot_diag;
    PathOut pilot = run_path(sz, Family::ridge, 0.0, std::vector<double>(p, 1.0), config, pilot_diag);
    std::vector<double> wq(pilot.grid.size());
    for (std::size_t k = 0; k < wq.size(); ++k) wq[k] = wqbic_value(pilot.loglik[k], pilot.s[k], area);
    const Vec& b = pilot.internal[static_cast<std::size_t>(select_wqbic(wq))];
    pf = adaptive_lambdas(std::span<const double>(b.data() + 1, p), 1.0);
    diag.irls_iterations += pilot_diag.irls_iterations;
    diag.cd_sweeps += pilot_diag.cd_sweeps;
  } else {
    pf = penalty_factors(penalty, p);
  }

  PathOut path = run_path(sz, penalty.family, penalty.gamma, pf, config, diag);
  const auto n_l = path.grid.size();
  res.lambda_grid = path.grid;
  res.coef_path.resize(static_cast<Eigen::Index>(n_l), static_cast<Eigen::Index>(p + 1));
  res.wqbic.resize(n_l);
  for (std::size_t k = 0; k < n_l; ++k) {
    auto orig = to_original(as_std(path.internal[k]), st);
    for (std::size_t j = 0; j <= p; ++j) {
      res.coef_path(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) = orig[j];
    }
    res.wqbic[k] = wqbic_value(path.loglik[k], path.s[k], area);
  }
  res.selected_index = select_wqbic(res.wqbic);
  const auto sel = static_cast<std::size_t>(res.selected_index);
  res.beta_internal = as_std(path.internal[sel]);
  res.beta_hat = to_original(res.beta_internal, st);
  for (std::size_t j = 1; j <= p; ++j) {
    // zero pattern follows the internal solution exactly
    if (res.beta_internal[j] != 0.0) {
      res.support.push_back(static_cast<int>(j));
    } else {
      res.beta_hat[j] = 0.0;
    }
  }
  diag.final_objective = path.objective[sel];
  diag.center = st.center;
  diag.scale = st.scale;
  diag.penalty_factor = pf;
  diag.n_quadrature = scheme.size();

  PenaltyCtx pc{penalty.family, penalty.gamma, std::vector<double>(p)};
  for (std::size_t j = 0; j < p; ++j) pc.lambdas[j] = path.grid[sel] * pf[j];
  attach_se(res, scheme, st, pc, config);
  return res;
}

QuadratureScheme build_scheme(const PointPattern& pattern, const CovariateList& covariates,
                              const FitConfig& config, Diagnostics* diag) {
  config.validate();
  for (const auto& c : covariates) {
    if (!c.window().contains(pattern.window())) {
      throw ConfigError("covariate rasters do not cover the pattern window");
    }
  }
  const Window& win = pattern.window();
  const int nd = config.nd > 0 ? config.nd : default_nd(pattern);
  const double r = config.r > 0.0 ? config.r : default_r(win);
  if (diag) {
    diag->nd = nd;
    diag->r = r;
  }

  // rho_hat from an unpenalized Poisson fit, evaluated on `target` rows
  auto first_stage = [&](const QuadratureScheme& target, std::vector<double>& rho_rows,
                         std::vector<double>& rho_data) {
    QuadratureScheme bt = build_berman_turner(pattern, covariates, nd);
    FitConfig fc = config;
    fc.penalty.reset();
    fc.compute_se = false;
    FitResult first = fit_unpenalized(bt, fc);
    Vec b = as_vec(first.beta_hat);
    Vec eta = (target.Z * b).cwiseMax(-kClamp).cwiseMin(kClamp);
    rho_rows.resize(target.size());
    for (std::size_t i = 0; i < target.size(); ++i) rho_rows[i] = std::exp(eta(static_cast<Eigen::Index>(i)));
    rho_data.assign(rho_rows.begin(), rho_rows.begin() + static_cast<std::ptrdiff_t>(pattern.size()));
  };

  if (config.method == Method::pl || config.method == Method::wpl) {
    QuadratureScheme s = build_berman_turner(pattern, covariates, nd);
    if (config.method == Method::wpl) {
      std::vector<double> rho, rho_data;
      first_stage(s, rho, rho_data);
      double f = f_hat(pattern, rho_data, r);
      if (diag) diag->f_hat = f;
      set_weights(s, weight_surface_poisson(rho, f).values);
    }
    if (diag) diag->n_quadrature = s.size();
    return s;
  }

  PointPattern dummies = dummy_process(config.dummy, nd, win, config.seed);
  const double delta = config.delta > 0.0 ? config.delta : static_cast<double>(nd) * nd / area(win);
  if (diag) diag->delta = delta;
  QuadratureScheme s =
      build_logistic_scheme(pattern, covariates, dummies, [delta](Point) { return delta; });
  if (config.method == Method::wlogit) {
    std::vector<double> rho, rho_data;
    first_stage(s, rho, rho_data);
    double f = f_hat(pattern, rho_data, r);
    if (diag) diag->f_hat = f;
    std::vector<double> deltas(s.size(), delta);
    set_weights(s, weight_surface_logistic(rho, deltas, f).values);
  }
  if (diag) diag->n_quadrature = s.size();
  return s;
}

FitResult fit(const PointPattern& pattern, const CovariateList& covariates, const FitConfig& config) {
  Diagnostics pre;
  QuadratureScheme s = build_scheme(pattern, covariates, config, &pre);
  FitResult res = config.penalty ? fit_path(s, *config.penalty, config) : fit_unpenalized(s, config);
  res.diagnostics.nd = pre.nd;
  res.diagnostics.r = pre.r;
  res.diagnostics.delta = pre.delta;
  res.diagnostics.f_hat = pre.f_hat;
  return res;
}

}  // namespace ppr
