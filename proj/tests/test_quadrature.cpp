#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <string>

#include "doctest.h"
#include "ppr/error.hpp"
#include "ppr/quadrature.hpp"
#include "ppr/simulate.hpp"

using namespace ppr;

namespace {

double sum_v(const QuadratureScheme& s) { return std::accumulate(s.v.begin(), s.v.end(), 0.0); }

}  // namespace

TEST_CASE("berman-turner on an empty pattern") {
  PointPattern empty(Window(0, 1, 0, 1));
  auto s = build_berman_turner(empty, {}, 10);
  CHECK(s.size() == 100);
  CHECK(s.n_data == 0);
  CHECK(s.p() == 0);
  for (double v : s.v) CHECK(v == doctest::Approx(0.01).epsilon(1e-15));
  CHECK(sum_v(s) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("berman-turner counting weights") {
  // cell [0,0.5]^2 holds the dummy plus two data points
  PointPattern p(Window(0, 1, 0, 1), {{0.1, 0.1}, {0.4, 0.2}, {0.9, 0.9}});
  auto s = build_berman_turner(p, {}, 2);
  REQUIRE(s.size() == 7);
  const double a = 0.25;
  CHECK(s.v[0] == doctest::Approx(a / 3));
  CHECK(s.v[1] == doctest::Approx(a / 3));
  CHECK(s.v[2] == doctest::Approx(a / 2));
  CHECK(s.v[3] == doctest::Approx(a / 3));  // dummy of cell (0,0)
  CHECK(s.v[4] == doctest::Approx(a));
  CHECK(s.v[5] == doctest::Approx(a));
  CHECK(s.v[6] == doctest::Approx(a / 2));
  CHECK(s.is_data[0] == 1);
  CHECK(s.is_data[3] == 0);
  CHECK(sum_v(s) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("data on a cell boundary goes to the lower cell") {
  PointPattern p(Window(0, 1, 0, 1), {{0.5, 0.5}});
  auto s = build_berman_turner(p, {}, 2);
  // shares cell (0,0) with the first dummy
  CHECK(s.v[0] == doctest::Approx(0.125));
  CHECK(s.v[1] == doctest::Approx(0.125));
  CHECK(s.v[2] == doctest::Approx(0.25));
}

TEST_CASE("berman-turner design rows") {
  CovariateList covs{CovariateField(2, 1, Window(0, 2, 0, 1), {3.0, -1.0})};
  PointPattern p(Window(0, 2, 0, 1), {{1.9, 0.5}});
  auto s = build_berman_turner(p, covs, 2);
  CHECK(s.p() == 1);
  CHECK(s.Z(0, 0) == 1.0);
  CHECK(s.Z(0, 1) == -1.0);
  CHECK(s.Z(1, 1) == 3.0);
  for (double w : s.w) CHECK(w == 1.0);
}

TEST_CASE("constant integrand is integrated exactly") {
  auto eng = RngSeed{4, 0}.engine();
  for (int trial = 0; trial < 20; ++trial) {
    double x0 = uniform01(eng) * 10 - 5, y0 = uniform01(eng) * 10 - 5;
    Window w(x0, x0 + 0.5 + 20 * uniform01(eng), y0, y0 + 0.5 + 20 * uniform01(eng));
    auto pat = simulate_poisson([](Point) { return 1.0; }, 1.0, w, {5, static_cast<std::uint64_t>(trial)});
    int nd = 1 + static_cast<int>(uniform01(eng) * 60);
    auto s = build_berman_turner(pat, {}, nd);
    const double c = 0.37;
    double q = 0;
    for (std::size_t i = 0; i < s.size(); ++i) q += s.v[i] * c;
    CHECK(std::abs(q - c * area(w)) <= 1e-10 * c * area(w));
    for (double v : s.v) CHECK(v > 0);
  }
}

TEST_CASE("berman-turner error shrinks as nd doubles") {
  // fine raster varying in x only, so nearest-pixel lookup stays far below
  // the quadrature error
  const int n = 200001;
  std::vector<double> vals(static_cast<std::size_t>(n));
  for (int ix = 0; ix < n; ++ix) {
    double x = (ix + 0.5) / n;
    vals[static_cast<std::size_t>(ix)] = std::sin(3 * x) + x * x;
  }
  CovariateList covs{CovariateField(n, 1, Window(0, 1, 0, 1), vals)};
  const double truth = pixel_integral(covs, Window(0, 1, 0, 1), [](std::span<const double> z) { return std::exp(z[0]); });
  double last = std::numeric_limits<double>::infinity();
  for (int nd : {5, 10, 20, 40, 80}) {
    auto s = build_berman_turner(PointPattern(Window(0, 1, 0, 1)), covs, nd);
    double q = 0;
    for (std::size_t i = 0; i < s.size(); ++i) q += s.v[i] * std::exp(s.Z(static_cast<Eigen::Index>(i), 1));
    double err = std::abs(q - truth);
    CHECK(err < last / 2);
    last = err;
  }
}

TEST_CASE("default nd") {
  CHECK(default_nd(std::size_t{1600}) == 80);
  CHECK(default_nd(std::size_t{0}) == 10);
  CHECK(default_nd(std::size_t{401}) == 41);
  CHECK(default_nd(std::size_t{25}) == 10);
  CHECK(default_nd(std::size_t{3604}) == 121);
}

TEST_CASE("logistic offsets and success probability") {
  const double d = default_delta(3604, 500000);
  CHECK(d == doctest::Approx(0.028832));
  // frozen from tests/oracle/derive_oracles.py
  CHECK(-std::log(d) == doctest::Approx(3.5462693975562098).epsilon(1e-14));
  CHECK(logistic_success(std::log(d), -std::log(d)) == doctest::Approx(0.5));
  auto eng = RngSeed{2, 0}.engine();
  for (int i = 0; i < 100; ++i) {
    double rho = std::exp(6 * uniform01(eng) - 3), delta = std::exp(6 * uniform01(eng) - 3);
    CHECK(std::abs(logistic_success(std::log(rho), -std::log(delta)) - rho / (rho + delta)) < 1e-12);
  }
  CHECK(logistic_success(800, 0) == 1.0);
  CHECK(logistic_success(-800, 0) == 0.0);
}

TEST_CASE("logistic scheme") {
  Window w(0, 10, 0, 10);
  PointPattern pat(w, {{1, 1}, {2, 3}, {9, 9}});
  auto dummies = dummy_process(DummyKind::binomial, 4, w, {3, 0});
  auto s = build_logistic_scheme(pat, {}, dummies, [](Point) { return 0.25; });
  CHECK(s.size() == 3 + 16);
  CHECK(s.kind == SchemeKind::logistic);
  std::size_t ones = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    ones += s.is_data[i];
    CHECK(s.v[i] == doctest::Approx(-std::log(0.25)));
    CHECK(s.delta(i) == doctest::Approx(0.25));
  }
  CHECK(ones == 3);
  CHECK_THROWS_AS(build_logistic_scheme(pat, {}, dummies, [](Point u) { return u.x - 5; }), DomainError);
  PointPattern other(Window(0, 5, 0, 5));
  CHECK_THROWS_AS(build_logistic_scheme(pat, {}, other, [](Point) { return 1.0; }), ConfigError);
}

TEST_CASE("set_weights validates") {
  auto s = build_berman_turner(PointPattern(Window(0, 1, 0, 1)), {}, 2);
  CHECK_THROWS_AS(set_weights(s, {1, 1}), ConfigError);
  CHECK_THROWS_AS(set_weights(s, {1, 1, 0, 1}), DomainError);
  set_weights(s, {1, 0.5, 0.25, 2});
  CHECK(s.w[3] == 2.0);
}

TEST_CASE("scheme dump") {
  CovariateList covs{CovariateField(1, 1, Window(0, 1, 0, 1), {0.5})};
  auto s = build_berman_turner(PointPattern(Window(0, 1, 0, 1), {{0.2, 0.2}}), covs, 1);
  auto path = std::filesystem::temp_directory_path() / "ppr_scheme.csv";
  dump_csv(path, s);
  std::ifstream in(path);
  std::string header, first;
  std::getline(in, header);
  std::getline(in, first);
  CHECK(header == "i,x,y,is_data,v_or_offset,w,z1");
  CHECK(first == "0,0.20000000000000001,0.20000000000000001,1,0.5,1,0.5");
}
