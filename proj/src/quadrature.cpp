#include "ppr/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "ppr/error.hpp"

namespace ppr {

namespace {

int cell_of(double coord, double lo, double step, int n) {
  // boundary points fall to the lower cell
  int i = static_cast<int>(std::ceil((coord - lo) / step)) - 1;
  return std::clamp(i, 0, n - 1);
}

void fill_design(QuadratureScheme& s, const CovariateList& covariates) {
  const auto p = covariates.size();
  s.Z.resize(static_cast<Eigen::Index>(s.size()), static_cast<Eigen::Index>(p + 1));
  std::vector<double> row(p);
  for (std::size_t i = 0; i < s.size(); ++i) {
    covariate_row(covariates, s.locations[i], row);
    const auto r = static_cast<Eigen::Index>(i);
    s.Z(r, 0) = 1.0;
    for (std::size_t j = 0; j < p; ++j) s.Z(r, static_cast<Eigen::Index>(j + 1)) = row[j];
  }
  if (!s.Z.allFinite()) throw DomainError("covariate values must be finite");
  s.w.assign(s.size(), 1.0);
}

}  // namespace

double QuadratureScheme::delta(std::size_t i) const { return std::exp(-v[i]); }

QuadratureScheme build_berman_turner(const PointPattern& pattern, const CovariateList& covariates,
                                     int nd) {
  if (nd < 1) throw PreconditionError("nd must be at least 1");
  const Window& win = pattern.window();
  const double dx = win.width() / nd, dy = win.height() / nd;
  const double a = area(win) / (static_cast<double>(nd) * nd);

  QuadratureScheme s;
  s.kind = SchemeKind::poisson;
  s.window = win;
  s.n_data = pattern.size();
  const std::size_t n_cells = static_cast<std::size_t>(nd) * nd;
  s.locations.reserve(pattern.size() + n_cells);
  std::vector<std::size_t> cell(pattern.size() + n_cells);
  std::vector<int> count(n_cells, 1);  // every cell holds its dummy

  for (std::size_t i = 0; i < pattern.size(); ++i) {
    const Point u = pattern[i];
    int ix = cell_of(u.x, win.x_min(), dx, nd), iy = cell_of(u.y, win.y_min(), dy, nd);
    cell[i] = static_cast<std::size_t>(iy) * nd + ix;
    ++count[cell[i]];
    s.locations.push_back(u);
  }
  for (int iy = 0; iy < nd; ++iy) {
    for (int ix = 0; ix < nd; ++ix) {
      cell[s.locations.size()] = static_cast<std::size_t>(iy) * nd + ix;
      s.locations.push_back({win.x_min() + (ix + 0.5) * dx, win.y_min() + (iy + 0.5) * dy});
    }
  }
  s.is_data.assign(s.size(), 0);
  std::fill_n(s.is_data.begin(), s.n_data, 1);
  s.v.resize(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) s.v[i] = a / count[cell[i]];
  fill_design(s, covariates);
  return s;
}

int default_nd(std::size_t m) {
  auto nd = static_cast<int>(std::ceil(std::sqrt(4.0 * static_cast<double>(m))));
  // guard sqrt rounding on perfect squares
  while (nd > 1 && static_cast<double>(nd - 1) * (nd - 1) >= 4.0 * static_cast<double>(m)) --nd;
  return std::max(10, nd);
}

int default_nd(const PointPattern& pattern) { return default_nd(pattern.size()); }

double default_delta(std::size_t m, double area) {
  if (!(area > 0.0)) throw DomainError("area must be positive");
  return 4.0 * static_cast<double>(m) / area;
}

double logistic_success(double linear_predictor, double offset) {
  double t = linear_predictor + offset;
  return t >= 0.0 ? 1.0 / (1.0 + std::exp(-t)) : std::exp(t) / (1.0 + std::exp(t));
}

QuadratureScheme build_logistic_scheme(const PointPattern& pattern,
                                       const CovariateList& covariates,
                                       const PointPattern& dummies, const DeltaFn& delta) {
  if (!(pattern.window() == dummies.window())) {
    throw ConfigError("dummy points must share the pattern's window");
  }
  QuadratureScheme s;
  s.kind = SchemeKind::logistic;
  s.window = pattern.window();
  s.n_data = pattern.size();
  s.locations.assign(pattern.points().begin(), pattern.points().end());
  s.locations.insert(s.locations.end(), dummies.points().begin(), dummies.points().end());
  s.is_data.assign(s.size(), 0);
  std::fill_n(s.is_data.begin(), s.n_data, 1);
  s.v.resize(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    double d = delta(s.locations[i]);
    if (!(d > 0.0) || !std::isfinite(d)) throw DomainError("delta must be positive and finite");
    s.v[i] = -std::log(d);
  }
  fill_design(s, covariates);
  return s;
}

void set_weights(QuadratureScheme& scheme, std::vector<double> w) {
  if (w.size() != scheme.size()) throw ConfigError("one weight per quadrature location required");
  for (double x : w) {
    if (!(x > 0.0) || !std::isfinite(x)) throw DomainError("weights must be positive and finite");
  }
  scheme.w = std::move(w);
}

void dump_csv(const std::filesystem::path& path, const QuadratureScheme& s) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "i,x,y,is_data,v_or_offset,w";
  for (std::size_t j = 1; j <= s.p(); ++j) out << ",z" << j;
  out << '\n';
  for (std::size_t i = 0; i < s.size(); ++i) {
    out << i << ',' << format_real(s.locations[i].x) << ',' << format_real(s.locations[i].y)
        << ',' << int(s.is_data[i]) << ',' << format_real(s.v[i]) << ',' << format_real(s.w[i]);
    for (std::size_t j = 1; j <= s.p(); ++j) {
      out << ',' << format_real(s.Z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    }
    out << '\n';
  }
}

}  // namespace ppr
